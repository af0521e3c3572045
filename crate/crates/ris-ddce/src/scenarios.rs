//! Built-in scenario files, embedded at compile time.

pub const FIG2: &str = include_str!("../scenarios/fig2.toml");
pub const FIG3: &str = include_str!("../scenarios/fig3.toml");
pub const FIG4: &str = include_str!("../scenarios/fig4.toml");
pub const FIG5: &str = include_str!("../scenarios/fig5.toml");
pub const FIG6: &str = include_str!("../scenarios/fig6.toml");
pub const FIG7: &str = include_str!("../scenarios/fig7.toml");

pub const ALL: [(&str, &str); 6] = [
    ("fig2", FIG2),
    ("fig3", FIG3),
    ("fig4", FIG4),
    ("fig5", FIG5),
    ("fig6", FIG6),
    ("fig7", FIG7),
];

/// Text of the built-in scenario called `name`.
pub fn builtin(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    #[test]
    fn builtins_parse_and_validate() {
        for (name, text) in ALL {
            let cfg = ScenarioConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
        }
    }
}
