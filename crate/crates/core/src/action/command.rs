//! The seven-verb command grammar.
//!
//! ```text
//! Add {Name} to [(x, y, z)]
//! Move {Name} to [(x, y, z)]
//! Rotate {Name} [(x, y, z)]
//! Scale {Name} [m] times
//! Color {Name} to <word>[(r, g, b)]
//! Change {Name} to [Material]
//! Destroy {Name}
//! ```
//!
//! Braces and brackets are mandatory. A few spellings providers produce in
//! practice are also accepted: `Delete` for `Destroy`, `Style` for `Change`,
//! an optional `to` after Rotate/Scale, and a missing `times`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{ColorRGB, Material, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionVerb {
    Add,
    Move,
    Rotate,
    Scale,
    Color,
    Style,
    Destroy,
}

impl ActionVerb {
    pub const ALL: [ActionVerb; 7] = [
        ActionVerb::Add,
        ActionVerb::Move,
        ActionVerb::Rotate,
        ActionVerb::Scale,
        ActionVerb::Color,
        ActionVerb::Style,
        ActionVerb::Destroy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ActionVerb::Add => "Add",
            ActionVerb::Move => "Move",
            ActionVerb::Rotate => "Rotate",
            ActionVerb::Scale => "Scale",
            ActionVerb::Color => "Color",
            ActionVerb::Style => "Style",
            ActionVerb::Destroy => "Destroy",
        }
    }

    /// Accepts the verb names used in the steps JSON `"action"` field, plus the
    /// prose synonyms `Delete` and `Change`. Case-insensitive.
    pub fn from_label(label: &str) -> Option<ActionVerb> {
        let label = label.trim();
        let pick = |s: &str| label.eq_ignore_ascii_case(s);
        Some(if pick("Add") {
            ActionVerb::Add
        } else if pick("Move") {
            ActionVerb::Move
        } else if pick("Rotate") {
            ActionVerb::Rotate
        } else if pick("Scale") {
            ActionVerb::Scale
        } else if pick("Color") || pick("Colour") {
            ActionVerb::Color
        } else if pick("Style") || pick("Change") {
            ActionVerb::Style
        } else if pick("Destroy") || pick("Delete") {
            ActionVerb::Destroy
        } else {
            return None;
        })
    }
}

impl fmt::Display for ActionVerb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Verb together with its typed payload, so a key can never mismatch its verb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", content = "key")]
pub enum ActionKind {
    Add(Vector3),
    Move(Vector3),
    /// Absolute Euler angles in degrees.
    Rotate(Vector3),
    /// Uniform multiplier applied to all three scale components.
    Scale(f64),
    Color(ColorRGB),
    Style(Material),
    Destroy,
}

impl ActionKind {
    pub fn verb(&self) -> ActionVerb {
        match self {
            ActionKind::Add(_) => ActionVerb::Add,
            ActionKind::Move(_) => ActionVerb::Move,
            ActionKind::Rotate(_) => ActionVerb::Rotate,
            ActionKind::Scale(_) => ActionVerb::Scale,
            ActionKind::Color(_) => ActionVerb::Color,
            ActionKind::Style(_) => ActionVerb::Style,
            ActionKind::Destroy => ActionVerb::Destroy,
        }
    }

    /// The payload in the steps JSON `"key"` form.
    pub fn key_text(&self) -> String {
        match self {
            ActionKind::Add(v) | ActionKind::Move(v) | ActionKind::Rotate(v) => v.to_string(),
            ActionKind::Scale(m) => format_multiplier(*m),
            ActionKind::Color(c) => c.to_vector_text(),
            ActionKind::Style(m) => m.name().to_string(),
            ActionKind::Destroy => String::new(),
        }
    }
}

/// One executable scene mutation addressed by object name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub target: String,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl Action {
    pub fn new(target: impl Into<String>, kind: ActionKind) -> Self {
        Self {
            target: target.into(),
            kind,
        }
    }

    pub fn verb(&self) -> ActionVerb {
        self.kind.verb()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_command(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown verb {0:?}")]
    UnknownVerb(String),
    #[error("malformed vector at byte {offset}: {reason}")]
    MalformedVector { offset: usize, reason: String },
    #[error("unknown material {0:?}")]
    UnknownMaterial(String),
    #[error("scale multiplier {0:?} must be a positive finite number")]
    NonPositiveScale(String),
}

impl CommandError {
    /// Stable snake-case tag used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            CommandError::Syntax { .. } => "syntax_error",
            CommandError::UnknownVerb(_) => "unknown_verb",
            CommandError::MalformedVector { .. } => "malformed_vector",
            CommandError::UnknownMaterial(_) => "unknown_material",
            CommandError::NonPositiveScale(_) => "non_positive_scale",
        }
    }
}

/// Material names providers use that are not in the closed set, mapped to the
/// closest member.
pub const DEFAULT_MATERIAL_ALIASES: &[(&str, Material)] = &[
    ("Wood", Material::RusticWood),
    ("Metal", Material::ShinyMetal),
    ("DarkGlass", Material::GlassDark),
];

/// How material names are resolved while parsing.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions<'a> {
    pub aliases: &'a [(&'a str, Material)],
}

impl ParseOptions<'static> {
    /// Closed-set only: `Wood` is rejected.
    pub const STRICT: ParseOptions<'static> = ParseOptions { aliases: &[] };
    /// With the default alias map.
    pub const LENIENT: ParseOptions<'static> = ParseOptions {
        aliases: DEFAULT_MATERIAL_ALIASES,
    };
}

/// Something the parser accepted but wants the caller to know about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseNote {
    MaterialAlias { given: String, resolved: Material },
}

/// Strict parse: exact grammar, closed material set, no aliases.
pub fn parse_command(text: &str) -> Result<Action, CommandError> {
    parse_command_with(text, ParseOptions::STRICT).map(|(a, _)| a)
}

pub fn parse_command_with(
    text: &str,
    options: ParseOptions<'_>,
) -> Result<(Action, Vec<ParseNote>), CommandError> {
    let mut cur = Cursor::new(text);
    let mut notes = Vec::new();
    cur.skip_ws();
    let word = cur.word();
    if word.is_empty() {
        return Err(cur.expected("a verb"));
    }
    let verb = match word {
        "Add" => ActionVerb::Add,
        "Move" => ActionVerb::Move,
        "Rotate" => ActionVerb::Rotate,
        "Scale" => ActionVerb::Scale,
        "Color" => ActionVerb::Color,
        "Change" | "Style" => ActionVerb::Style,
        "Destroy" | "Delete" => ActionVerb::Destroy,
        other => return Err(CommandError::UnknownVerb(other.to_string())),
    };
    let target = cur.braced_name()?;

    let kind = match verb {
        ActionVerb::Add | ActionVerb::Move => {
            cur.keyword("to")?;
            ActionKind::from_vector(verb, cur.bracketed_vector()?)
        }
        ActionVerb::Rotate => {
            cur.optional_keyword("to");
            ActionKind::Rotate(cur.bracketed_vector()?)
        }
        ActionVerb::Scale => {
            cur.optional_keyword("to");
            let (at, raw) = cur.bracketed()?;
            let raw = raw.trim();
            let m: f64 = raw.parse().map_err(|_| CommandError::Syntax {
                offset: at,
                expected: "a number".to_string(),
            })?;
            if !(m.is_finite() && m > 0.0) {
                return Err(CommandError::NonPositiveScale(raw.to_string()));
            }
            cur.optional_keyword("times");
            ActionKind::Scale(m)
        }
        ActionVerb::Color => {
            cur.optional_keyword("to");
            // free color word up to '[' is ignored; the vector is authoritative
            cur.skip_until('[');
            let (at, raw) = cur.bracketed()?;
            let color = ColorRGB::parse_vector(raw).map_err(|e| CommandError::MalformedVector {
                offset: at,
                reason: e.to_string(),
            })?;
            ActionKind::Color(color)
        }
        ActionVerb::Style => {
            cur.keyword("to")?;
            let (_, raw) = cur.bracketed()?;
            let name = raw.trim();
            let material = resolve_material(name, options, &mut notes)?;
            ActionKind::Style(material)
        }
        ActionVerb::Destroy => ActionKind::Destroy,
    };

    cur.skip_ws();
    if !cur.at_end() {
        return Err(cur.expected("end of command"));
    }
    Ok((Action { target, kind }, notes))
}

fn resolve_material(
    name: &str,
    options: ParseOptions<'_>,
    notes: &mut Vec<ParseNote>,
) -> Result<Material, CommandError> {
    if let Some(m) = Material::from_name(name) {
        return Ok(m);
    }
    if !options.aliases.is_empty() {
        if let Some(m) = Material::from_name_ignore_case(name) {
            return Ok(m);
        }
        if let Some((_, m)) = options
            .aliases
            .iter()
            .find(|(alias, _)| alias.eq_ignore_ascii_case(name))
        {
            notes.push(ParseNote::MaterialAlias {
                given: name.to_string(),
                resolved: *m,
            });
            return Ok(*m);
        }
    }
    Err(CommandError::UnknownMaterial(name.to_string()))
}

impl ActionKind {
    fn from_vector(verb: ActionVerb, v: Vector3) -> ActionKind {
        match verb {
            ActionVerb::Add => ActionKind::Add(v),
            ActionVerb::Move => ActionKind::Move(v),
            _ => ActionKind::Rotate(v),
        }
    }
}

/// Canonical text for an action. `parse_command(&format_command(a))` yields `a`
/// whenever vector components are multiples of 0.01.
pub fn format_command(action: &Action) -> String {
    let name = &action.target;
    match &action.kind {
        ActionKind::Add(v) => format!("Add {{{name}}} to [{v}]"),
        ActionKind::Move(v) => format!("Move {{{name}}} to [{v}]"),
        ActionKind::Rotate(v) => format!("Rotate {{{name}}} [{v}]"),
        ActionKind::Scale(m) => format!("Scale {{{name}}} [{}] times", format_multiplier(*m)),
        ActionKind::Color(c) => format!("Color {{{name}}} to rgb[{}]", c.to_vector_text()),
        ActionKind::Style(m) => format!("Change {{{name}}} to [{}]", m.name()),
        ActionKind::Destroy => format!("Destroy {{{name}}}"),
    }
}

/// Shortest text that parses back to the same `f64`.
fn format_multiplier(m: f64) -> String {
    format!("{m}")
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn expected(&self, what: &str) -> CommandError {
        CommandError::Syntax {
            offset: self.pos,
            expected: what.to_string(),
        }
    }

    fn word(&mut self) -> &'a str {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn keyword(&mut self, kw: &str) -> Result<(), CommandError> {
        if self.optional_keyword(kw) {
            Ok(())
        } else {
            Err(self.expected(&format!("'{kw}'")))
        }
    }

    fn optional_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        let matches = rest.len() >= kw.len()
            && rest.as_bytes()[..kw.len()].eq_ignore_ascii_case(kw.as_bytes())
            && !rest[kw.len()..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_');
        if matches {
            self.pos += kw.len();
        }
        matches
    }

    fn skip_until(&mut self, c: char) {
        if let Some(i) = self.rest().find(c) {
            self.pos += i;
        }
    }

    fn delimited(
        &mut self,
        open: char,
        close: char,
        what: &str,
    ) -> Result<(usize, &'a str), CommandError> {
        self.skip_ws();
        if !self.rest().starts_with(open) {
            return Err(self.expected(&format!("'{open}' opening {what}")));
        }
        self.pos += open.len_utf8();
        let start = self.pos;
        let rest = self.rest();
        let end = rest
            .find(close)
            .ok_or_else(|| self.expected(&format!("'{close}' closing {what}")))?;
        let inner = &rest[..end];
        self.pos += end + close.len_utf8();
        Ok((start, inner))
    }

    fn braced_name(&mut self) -> Result<String, CommandError> {
        let (at, inner) = self.delimited('{', '}', "object name")?;
        let name = inner.trim();
        if name.is_empty() || name.contains(['{', '[', ']']) {
            return Err(CommandError::Syntax {
                offset: at,
                expected: "a non-empty object name".to_string(),
            });
        }
        Ok(name.to_string())
    }

    fn bracketed(&mut self) -> Result<(usize, &'a str), CommandError> {
        self.delimited('[', ']', "value")
    }

    fn bracketed_vector(&mut self) -> Result<Vector3, CommandError> {
        let (at, raw) = self.bracketed()?;
        Vector3::parse(raw).map_err(|e| CommandError::MalformedVector {
            offset: at,
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3 {
        Vector3::new(x, y, z)
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse_command("Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]").unwrap(),
            Action::new("Movie_Poster", ActionKind::Add(v(-3.8, 1.0, 0.05)))
        );
        assert_eq!(
            parse_command("Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]").unwrap(),
            Action::new("Movie_Poster", ActionKind::Move(v(-1.0, 1.0, -3.95)))
        );
        assert_eq!(
            parse_command("Scale {TV} [1.2] times").unwrap(),
            Action::new("TV", ActionKind::Scale(1.2))
        );
        assert_eq!(
            parse_command("Color {Table} to red[(255, 0, 0)]").unwrap(),
            Action::new("Table", ActionKind::Color(ColorRGB::new(255, 0, 0)))
        );
        assert_eq!(
            parse_command("Rotate {Sofa} [(0, 180, 0)]").unwrap(),
            Action::new("Sofa", ActionKind::Rotate(v(0.0, 180.0, 0.0)))
        );
        assert_eq!(
            parse_command("Change {Table} to [Marble]").unwrap(),
            Action::new("Table", ActionKind::Style(Material::Marble))
        );
        assert_eq!(
            parse_command("Destroy {Cup}").unwrap(),
            Action::new("Cup", ActionKind::Destroy)
        );
    }

    #[test]
    fn wood_needs_the_alias_map() {
        assert_eq!(
            parse_command("Change {Table} to [Wood]"),
            Err(CommandError::UnknownMaterial("Wood".into()))
        );
        let (action, notes) =
            parse_command_with("Change {Table} to [Wood]", ParseOptions::LENIENT).unwrap();
        assert_eq!(action.kind, ActionKind::Style(Material::RusticWood));
        assert_eq!(
            notes,
            [ParseNote::MaterialAlias {
                given: "Wood".into(),
                resolved: Material::RusticWood
            }]
        );
    }

    #[test]
    fn tolerated_spellings() {
        assert_eq!(
            parse_command("Delete {Cup}").unwrap().kind,
            ActionKind::Destroy
        );
        assert_eq!(
            parse_command("Rotate {Sofa} to [( 0 , 90 , 0 )]")
                .unwrap()
                .kind,
            ActionKind::Rotate(v(0.0, 90.0, 0.0))
        );
        assert_eq!(
            parse_command("Scale {TV} to [2]").unwrap().kind,
            ActionKind::Scale(2.0)
        );
        assert_eq!(
            parse_command("Color {Sofa} to navy blue[(0, 0, 128)]")
                .unwrap()
                .kind,
            ActionKind::Color(ColorRGB::new(0, 0, 128))
        );
        assert_eq!(
            parse_command("  Destroy { Old Lamp }  ").unwrap().target,
            "Old Lamp"
        );
    }

    #[test]
    fn error_kinds() {
        assert_eq!(
            parse_command("Paint {Wall} to [(1, 2, 3)]"),
            Err(CommandError::UnknownVerb("Paint".into()))
        );
        assert!(matches!(
            parse_command("Move Sofa to [(1, 2, 3)]"),
            Err(CommandError::Syntax { offset: 5, .. })
        ));
        assert!(matches!(
            parse_command("Move {Sofa} to (1, 2, 3)"),
            Err(CommandError::Syntax { .. })
        ));
        assert!(matches!(
            parse_command("Move {Sofa} to [(1, 2)]"),
            Err(CommandError::MalformedVector { offset: 16, .. })
        ));
        assert!(matches!(
            parse_command("Color {Sofa} to red[(300, 0, 0)]"),
            Err(CommandError::MalformedVector { .. })
        ));
        assert_eq!(
            parse_command("Scale {TV} [0] times"),
            Err(CommandError::NonPositiveScale("0".into()))
        );
        assert_eq!(
            parse_command("Scale {TV} [-1.5] times"),
            Err(CommandError::NonPositiveScale("-1.5".into()))
        );
        assert!(matches!(
            parse_command("Destroy {Cup} now"),
            Err(CommandError::Syntax { .. })
        ));
        assert!(matches!(
            parse_command(""),
            Err(CommandError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse_command("Destroy {}"),
            Err(CommandError::Syntax { .. })
        ));
    }

    #[test]
    fn canonical_formatting() {
        assert_eq!(
            format_command(&Action::new("Cup", ActionKind::Destroy)),
            "Destroy {Cup}"
        );
        assert_eq!(
            format_command(&Action::new(
                "Table",
                ActionKind::Color(ColorRGB::new(255, 0, 0))
            )),
            "Color {Table} to rgb[(255, 0, 0)]"
        );
        assert_eq!(
            format_command(&Action::new("TV", ActionKind::Scale(1.2))),
            "Scale {TV} [1.2] times"
        );
        assert_eq!(
            format_command(&Action::new(
                "Movie_Poster",
                ActionKind::Add(v(-3.8, 1.0, 0.05))
            )),
            "Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]"
        );
    }
}
