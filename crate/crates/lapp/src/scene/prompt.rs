//! Prompt tokenization and resolution to collidable object sets.
//!
//! Grammar: comma-separated noun phrases, each optionally prefixed by one
//! color word. Nouns are canonical class names or alias phrases (synonyms
//! and short descriptions) mapped back to a canonical class at resolution
//! time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CollidableSet, Color, Scene, SceneError};

pub const COMMA: &str = ",";
pub const PAD: &str = "<pad>";

/// Fixed word vocabulary; token ids index the model's embedding table.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, u16>,
}

impl Vocabulary {
    /// Build from class names plus every alias word. Colors, the comma, and
    /// the pad token are always present. Word order (and therefore token
    /// ids) is deterministic.
    pub fn build(class_names: &[String], aliases: &AliasTable) -> Vocabulary {
        let mut words: Vec<String> = Vec::new();
        let push = |w: &str, words: &mut Vec<String>| {
            if !words.iter().any(|x| x == w) {
                words.push(w.to_string());
            }
        };
        for c in class_names {
            push(c, &mut words);
        }
        for c in Color::ALL {
            push(c.name(), &mut words);
        }
        let mut alias_words: Vec<String> = aliases
            .entries()
            .flat_map(|(alias, canonical)| {
                alias
                    .split_whitespace()
                    .chain(canonical.split_whitespace())
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect();
        alias_words.sort();
        alias_words.dedup();
        for w in &alias_words {
            push(w, &mut words);
        }
        push(COMMA, &mut words);
        push(PAD, &mut words);

        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u16))
            .collect();
        Vocabulary { words, index }
    }

    /// Vocabulary covering a single hand-built scene.
    pub fn for_scene(scene: &Scene, aliases: &AliasTable) -> Vocabulary {
        let mut names: Vec<String> = scene.objects.iter().map(|o| o.class_name.clone()).collect();
        names.sort();
        names.dedup();
        Vocabulary::build(&names, aliases)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u16> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u16) -> &str {
        &self.words[id as usize]
    }

    pub fn pad_id(&self) -> u16 {
        self.index[PAD]
    }

    pub fn comma_id(&self) -> u16 {
        self.index[COMMA]
    }
}

/// Alias phrase -> canonical class name. Consulted only at evaluation time;
/// training prompts use canonical names.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    pub fn empty() -> Self {
        AliasTable::default()
    }

    /// Desk-scale alias table: one or two synonyms plus a short description
    /// per class.
    pub fn default_desk() -> Self {
        let mut t = AliasTable::default();
        let rows: &[(&str, &[&str])] = &[
            ("box", &["carton", "cube", "square container"]),
            ("tall-box", &["tower", "pillar", "tall cornered solid"]),
            ("flat-box", &["tile", "board", "low flat container"]),
            ("plate-box", &["tray", "bar", "long low box"]),
            ("sphere", &["ball", "globe", "round object"]),
            ("small-sphere", &["pebble", "marble", "little round object"]),
            ("capsule", &["pill", "canister", "rounded cylinder"]),
            ("long-capsule", &["tube", "baton", "long rounded cylinder"]),
            ("crate-box", &["bin", "deep square container"]),
            ("slab-box", &["plank", "long heavy board"]),
            ("orb-sphere", &["bauble", "large round object"]),
            ("rod-capsule", &["dowel", "thin long cylinder"]),
            ("stub-capsule", &["stump", "short rounded cylinder"]),
        ];
        for (canonical, aliases) in rows {
            for a in *aliases {
                t.insert(a, canonical);
            }
        }
        t
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) {
        self.map.insert(alias.to_string(), canonical.to_string());
    }

    pub fn resolve<'a>(&'a self, phrase: &'a str) -> &'a str {
        self.map.get(phrase).map(String::as_str).unwrap_or(phrase)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    /// Aliases of one canonical class, split into (synonyms, descriptions).
    /// Single-word aliases count as synonyms, multi-word ones as
    /// descriptions.
    pub fn variants_of(&self, canonical: &str) -> (Vec<&str>, Vec<&str>) {
        let mut syn = Vec::new();
        let mut desc = Vec::new();
        for (a, c) in self.entries() {
            if c == canonical {
                if a.contains(' ') {
                    desc.push(a);
                } else {
                    syn.push(a);
                }
            }
        }
        (syn, desc)
    }
}

/// Raw prompt text plus its token ids under a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguagePrompt {
    pub raw: String,
    pub tokens: Vec<u16>,
}

/// Split a prompt into word tokens; commas separate phrases and are tokens
/// themselves.
pub fn split_words(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in raw.to_lowercase().replace(',', " , ").split_whitespace() {
        out.push(piece.to_string());
    }
    out
}

impl LanguagePrompt {
    /// Tokenize deterministically; the empty prompt is valid. Unknown words
    /// error rather than being dropped.
    pub fn tokenize(raw: &str, vocab: &Vocabulary) -> Result<LanguagePrompt, SceneError> {
        let mut tokens = Vec::new();
        for word in split_words(raw) {
            match vocab.id(&word) {
                Some(id) => tokens.push(id),
                None => return Err(SceneError::UnknownToken(word)),
            }
        }
        Ok(LanguagePrompt {
            raw: raw.to_string(),
            tokens,
        })
    }

    pub fn empty() -> LanguagePrompt {
        LanguagePrompt {
            raw: String::new(),
            tokens: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Resolve a prompt against a scene: ids of objects whose class matches a
/// prompt noun (directly or through the alias table) and whose color matches
/// the phrase's color modifier when one is present. A noun with a
/// non-matching color contributes no ids; the empty prompt resolves to the
/// empty set.
pub fn resolve_prompt(
    scene: &Scene,
    prompt: &LanguagePrompt,
    aliases: &AliasTable,
) -> Result<CollidableSet, SceneError> {
    let mut set = CollidableSet::empty();
    let words = split_words(&prompt.raw);
    for phrase in words.split(|w| w == COMMA) {
        if phrase.is_empty() {
            continue;
        }
        let (color, noun_words) = match Color::from_name(&phrase[0]) {
            Some(c) => (Some(c), &phrase[1..]),
            None => (None, phrase),
        };
        if noun_words.is_empty() {
            continue;
        }
        let noun = noun_words.join(" ");
        let canonical = aliases.resolve(&noun);
        for obj in &scene.objects {
            if obj.class_name == canonical && color.map_or(true, |c| c == obj.color) {
                set.insert(obj.id);
            }
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Primitive};
    use crate::Vec3;

    fn scene_with(objs: &[(u32, &str, Color)]) -> Scene {
        let mut scene = Scene::empty(0);
        for (i, (id, class, color)) in objs.iter().enumerate() {
            scene.objects.push(super::super::ObjectInstance {
                id: *id,
                class_name: class.to_string(),
                color: *color,
                primitive: Primitive::Sphere { radius: 0.05 },
                pose: Pose::at(Vec3::new(0.2 + 0.15 * i as f64, 0.3, 0.05)),
            });
        }
        scene
    }

    #[test]
    fn noun_resolves_to_matching_object() {
        let scene = scene_with(&[(3, "pringles", Color::Red)]);
        let vocab = Vocabulary::for_scene(&scene, &AliasTable::empty());
        let p = LanguagePrompt::tokenize("pringles", &vocab).unwrap();
        let set = resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap();
        assert_eq!(set.to_vec(), vec![3]);
    }

    #[test]
    fn empty_prompt_resolves_empty() {
        let scene = scene_with(&[(0, "box", Color::Blue)]);
        let vocab = Vocabulary::for_scene(&scene, &AliasTable::empty());
        let p = LanguagePrompt::tokenize("", &vocab).unwrap();
        assert!(resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap().is_empty());
    }

    #[test]
    fn wrong_color_contributes_nothing() {
        let scene = scene_with(&[(0, "cap", Color::Blue)]);
        let vocab = Vocabulary::for_scene(&scene, &AliasTable::empty());
        let p = LanguagePrompt::tokenize("white cap", &vocab).unwrap();
        assert!(resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap().is_empty());
        let p = LanguagePrompt::tokenize("blue cap", &vocab).unwrap();
        assert_eq!(resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap().to_vec(), vec![0]);
    }

    #[test]
    fn unknown_token_is_an_error() {
        let scene = scene_with(&[(0, "box", Color::Red)]);
        let vocab = Vocabulary::for_scene(&scene, &AliasTable::empty());
        match LanguagePrompt::tokenize("box, warp-drive", &vocab) {
            Err(SceneError::UnknownToken(w)) => assert_eq!(w, "warp-drive"),
            other => panic!("expected unknown-token error, got {other:?}"),
        }
    }

    #[test]
    fn aliases_map_to_canonical() {
        let scene = scene_with(&[(1, "sphere", Color::Pink)]);
        let aliases = AliasTable::default_desk();
        let vocab = Vocabulary::build(&["sphere".into()], &aliases);
        let p = LanguagePrompt::tokenize("ball", &vocab).unwrap();
        assert_eq!(resolve_prompt(&scene, &p, &aliases).unwrap().to_vec(), vec![1]);
        let p = LanguagePrompt::tokenize("round object", &vocab).unwrap();
        assert_eq!(resolve_prompt(&scene, &p, &aliases).unwrap().to_vec(), vec![1]);
    }

    #[test]
    fn multi_phrase_union() {
        let scene = scene_with(&[(0, "box", Color::Red), (1, "sphere", Color::Blue), (2, "box", Color::Blue)]);
        let vocab = Vocabulary::for_scene(&scene, &AliasTable::empty());
        let p = LanguagePrompt::tokenize("red box, sphere", &vocab).unwrap();
        assert_eq!(resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap().to_vec(), vec![0, 1]);
        // un-colored noun matches every object of the class
        let p = LanguagePrompt::tokenize("box", &vocab).unwrap();
        assert_eq!(resolve_prompt(&scene, &p, &AliasTable::empty()).unwrap().to_vec(), vec![0, 2]);
    }
}
