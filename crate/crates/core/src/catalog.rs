//! Built-in proofs with the verdicts and headline numbers they must
//! reproduce.

use crate::assign::Verdict;
use crate::derive::Form;
use crate::io::{Loaded, ProofFile};

/// Expected outcome of deriving an entry in `form`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Headline {
    pub form: Form,
    /// Members of the complete set.
    pub polynomials: usize,
    pub classical_bound: i64,
    pub quantum_value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub verdict: Verdict,
    /// Contexts or bases the proof is built from.
    pub contexts: usize,
    pub headlines: &'static [Headline],
}

impl CatalogEntry {
    pub fn file(&self) -> ProofFile {
        ProofFile::parse(self.source).expect("catalog sources are valid")
    }

    pub fn load(&self) -> Loaded {
        self.file().load().expect("catalog sources are valid")
    }

    pub fn description(&self) -> String {
        self.file().description.unwrap_or_default()
    }
}

const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "mermin-peres",
        source: include_str!("../catalog/mermin-peres.toml"),
        verdict: Verdict::KsProof,
        contexts: 6,
        headlines: &[
            Headline { form: Form::Dichotomic, polynomials: 6, classical_bound: 4, quantum_value: 6 },
            Headline { form: Form::Projector, polynomials: 6, classical_bound: 4, quantum_value: 6 },
        ],
    },
    CatalogEntry {
        name: "mermin-pentagram",
        source: include_str!("../catalog/mermin-pentagram.toml"),
        verdict: Verdict::KsProof,
        contexts: 5,
        headlines: &[Headline { form: Form::Dichotomic, polynomials: 5, classical_bound: 3, quantum_value: 5 }],
    },
    CatalogEntry {
        name: "cabello-18",
        source: include_str!("../catalog/cabello-18.toml"),
        verdict: Verdict::KsProof,
        contexts: 9,
        headlines: &[Headline { form: Form::Projector, polynomials: 72, classical_bound: 8, quantum_value: 9 }],
    },
    CatalogEntry {
        name: "peres-33",
        source: include_str!("../catalog/peres-33.toml"),
        verdict: Verdict::KsProof,
        contexts: 16,
        headlines: &[Headline { form: Form::Projector, polynomials: 88, classical_bound: 15, quantum_value: 16 }],
    },
    CatalogEntry {
        name: "single-basis",
        source: include_str!("../catalog/single-basis.toml"),
        verdict: Verdict::NotKsProof,
        contexts: 1,
        headlines: &[],
    },
];

pub fn entries() -> &'static [CatalogEntry] {
    ENTRIES
}

pub fn find(name: &str) -> Option<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}
