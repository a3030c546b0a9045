//! Plain-text MDP definition files.
//!
//! ```text
//! # comments run from '#' to end of line
//! states 4          # count, including terminal state 0
//! actions 2
//! start 1
//! gamma 0.95
//! transition        # states*actions*states numbers, row-major (s, a, s')
//! 1 0 0 0
//! ...
//! reward            # same layout as transition
//! 0 0 0 0
//! ...
//! ```
//!
//! Header keys may appear in any order but must precede both tables. Numbers
//! inside a table may be split across lines freely; only their order matters.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let content = line.split('#').next().unwrap_or("");
                content.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Tokens { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(l, _)| *l).unwrap_or(0)
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, tok) = self.next().ok_or_else(|| Error::Parse {
            line: self.last_line(),
            message: format!("missing value for `{key}`"),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("`{tok}` is not a valid value for `{key}`"),
        })
    }
}

pub fn parse_mdp(text: &str) -> Result<TabularMdp> {
    let mut tokens = Tokens::new(text);
    let mut states: Option<usize> = None;
    let mut actions: Option<usize> = None;
    let mut start: Option<usize> = None;
    let mut gamma: Option<f64> = None;
    let mut transition: Option<Vec<f64>> = None;
    let mut reward: Option<Vec<f64>> = None;

    while let Some((line, key)) = tokens.next() {
        match key {
            "states" => states = Some(tokens.value(key)?),
            "actions" => actions = Some(tokens.value(key)?),
            "start" => start = Some(tokens.value(key)?),
            "gamma" => gamma = Some(tokens.value(key)?),
            "transition" | "reward" => {
                let (s, a) = match (states, actions) {
                    (Some(s), Some(a)) => (s, a),
                    _ => {
                        return Err(Error::Parse {
                            line,
                            message: format!("`{key}` table before `states` and `actions`"),
                        })
                    }
                };
                let mut table = Vec::with_capacity(s * a * s);
                for _ in 0..s * a * s {
                    table.push(tokens.value::<f64>(key)?);
                }
                let slot = if key == "transition" { &mut transition } else { &mut reward };
                if slot.replace(table).is_some() {
                    return Err(Error::Parse {
                        line,
                        message: format!("duplicate `{key}` table"),
                    });
                }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unexpected token `{other}`"),
                })
            }
        }
    }

    let missing = |what: &str| Error::Parse {
        line: tokens.last_line(),
        message: format!("missing `{what}`"),
    };
    TabularMdp::new(
        states.ok_or_else(|| missing("states"))?,
        actions.ok_or_else(|| missing("actions"))?,
        transition.ok_or_else(|| missing("transition"))?,
        reward.ok_or_else(|| missing("reward"))?,
        start.ok_or_else(|| missing("start"))?,
        gamma.ok_or_else(|| missing("gamma"))?,
    )
}

pub fn read_mdp(path: impl AsRef<Path>) -> Result<TabularMdp> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mdp(&text)
}

/// Render `mdp` in the file grammar; one table row per (state, action).
pub fn format_mdp(mdp: &TabularMdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", mdp.num_states());
    let _ = writeln!(out, "actions {}", mdp.num_actions());
    let _ = writeln!(out, "start {}", mdp.start_state());
    let _ = writeln!(out, "gamma {}", mdp.gamma());
    for (name, table) in [("transition", mdp.transition_table()), ("reward", mdp.reward_table())] {
        let _ = writeln!(out, "{name}");
        for row in table.chunks_exact(mdp.num_states()) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_round_trip() {
        for name in fixtures::FIXTURE_NAMES {
            let mdp = fixtures::by_name(name).unwrap();
            let parsed = parse_mdp(&format_mdp(&mdp)).unwrap();
            assert_eq!(parsed, mdp, "{name}");
        }
    }

    #[test]
    fn comments_and_wrapping() {
        let text = "
            # a bandit
            states 2 actions 2
            gamma 1   # undiscounted
            start 1
            transition
            1 0 1 0
            1 0 1 0
            reward 0 0 0 0
            1 0
            0 0
        ";
        let mdp = parse_mdp(text).unwrap();
        assert_eq!(mdp, fixtures::bandit());
    }

    #[test]
    fn reports_line_of_bad_token() {
        let text = "states 2\nactions 1\nstart 1\ngamma zero\n";
        match parse_mdp(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("zero"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn table_before_counts_is_rejected() {
        assert!(matches!(
            parse_mdp("transition 1 0\nstates 2"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn truncated_table() {
        let text = "states 2 actions 1 start 1 gamma 1 transition 1 0 1";
        assert!(matches!(parse_mdp(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn semantic_errors_surface_as_config_errors() {
        let text = "states 2 actions 1 start 1 gamma 1 transition 1 0 0.5 0.4 reward 0 0 0 0";
        assert!(matches!(parse_mdp(text), Err(Error::Config(_))));
    }
}
