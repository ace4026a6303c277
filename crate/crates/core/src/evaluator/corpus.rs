//! Deterministic synthetic service/street-guide corpora.
//!
//! Road names are drawn so that the last word of every road (including
//! the roads later deleted) is unique within its municipality, surnames come
//! in near-miss pairs (ROSSI/ROSSO), and first names never occur as a last
//! word. Every injected street corruption is checked not to produce the last
//! word of another road of the municipality.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, GoldAlignment, GoldEntry};
use crate::address::{municipality_key, normalize, render_civics, CivicNumber, QualifierTable, RawAddress};
use crate::quadstore::{GeoPoint, Iri};
use crate::reconciler::{CatalogNumber, CatalogRoad, Level, TargetService, ToponymCatalog};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorKind {
    Typo,
    MissingCivic,
    AliasMunicipality,
    NoiseChars,
    ReorderedName,
    MalformedCivic,
    RedNumber,
    RomanNumeral,
    AbbreviatedQualifier,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 9] = [
        ErrorKind::Typo,
        ErrorKind::MissingCivic,
        ErrorKind::AliasMunicipality,
        ErrorKind::NoiseChars,
        ErrorKind::ReorderedName,
        ErrorKind::MalformedCivic,
        ErrorKind::RedNumber,
        ErrorKind::RomanNumeral,
        ErrorKind::AbbreviatedQualifier,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CorpusSpec {
    pub n_services: usize,
    pub n_roads: usize,
    pub error_rates: BTreeMap<ErrorKind, f64>,
    pub clean_rate: f64,
    pub unreconcilable_rate: f64,
    /// Share of services carrying coordinates.
    pub coordinate_rate: f64,
    pub seed: u64,
    pub base: String,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        let error_rates = [
            (ErrorKind::Typo, 0.20),
            (ErrorKind::MissingCivic, 0.15),
            (ErrorKind::AliasMunicipality, 0.08),
            (ErrorKind::NoiseChars, 0.25),
            (ErrorKind::ReorderedName, 0.12),
            (ErrorKind::MalformedCivic, 0.10),
            (ErrorKind::RedNumber, 0.30),
            (ErrorKind::RomanNumeral, 0.50),
            (ErrorKind::AbbreviatedQualifier, 0.40),
        ]
        .into_iter()
        .collect();
        CorpusSpec {
            n_services: 5000,
            n_roads: 1000,
            error_rates,
            clean_rate: 0.15,
            unreconcilable_rate: 0.0575,
            coordinate_rate: 0.3,
            seed: 42,
            base: vocab::DEFAULT_BASE.to_string(),
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        for (kind, &r) in &self.error_rates {
            if !rate_ok(r) {
                return Err(EvalError::Spec(format!("{kind:?} rate {r} outside [0, 1]")));
            }
        }
        for (name, r) in [
            ("cleanRate", self.clean_rate),
            ("unreconcilableRate", self.unreconcilable_rate),
            ("coordinateRate", self.coordinate_rate),
        ] {
            if !rate_ok(r) {
                return Err(EvalError::Spec(format!("{name} {r} outside [0, 1]")));
            }
        }
        if self.clean_rate + self.unreconcilable_rate > 1.0 {
            return Err(EvalError::Spec(format!(
                "cleanRate + unreconcilableRate = {} exceeds 1",
                self.clean_rate + self.unreconcilable_rate
            )));
        }
        if self.n_roads == 0 && self.n_services > 0 {
            return Err(EvalError::Spec("services need at least one road".into()));
        }
        Iri::new(&self.base).map_err(|e| EvalError::Spec(e.to_string()))?;
        Ok(())
    }

    fn rate(&self, kind: ErrorKind) -> f64 {
        self.error_rates.get(&kind).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RecordKind {
    Clean,
    Dirty,
    Unreconcilable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusRecord {
    pub service: Iri,
    pub kind: RecordKind,
    /// The address as the street guide spells it, before corruption.
    pub clean: RawAddress,
    pub injected: Vec<ErrorKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Corpus {
    pub services: Vec<TargetService>,
    pub roads: Vec<CatalogRoad>,
    /// (alias, municipality) pairs.
    pub aliases: Vec<(String, String)>,
    pub gold: GoldAlignment,
    pub records: Vec<CorpusRecord>,
}

impl Corpus {
    pub fn catalog(&self) -> ToponymCatalog {
        ToponymCatalog::new(self.roads.clone(), QualifierTable::seed()).with_aliases(self.aliases.iter().cloned())
    }
}

/// (name, aliases, centre latitude, centre longitude)
pub const MUNICIPALITIES: [(&str, &[&str], f64, f64); 8] = [
    ("FIRENZE", &["FIRENZE (FI)", "FLORENCE"], 43.7696, 11.2558),
    ("PRATO", &["PRATO (PO)"], 43.8777, 11.1022),
    ("VICCHIO", &["VICCHIO DEL MUGELLO", "VICCHIO DI MUGELLO"], 43.9326, 11.4633),
    ("SAN CASCIANO IN VAL DI PESA", &["S. CASCIANO V.P.", "SAN CASCIANO"], 43.6569, 11.1856),
    ("BARBERINO DI MUGELLO", &["BARBERINO M.LLO", "BARBERINO"], 43.9999, 11.2390),
    ("SESTO FIORENTINO", &["SESTO F.NO", "SESTO"], 43.8318, 11.1995),
    ("BAGNO A RIPOLI", &["BAGNO A RIP.", "B. A RIPOLI"], 43.7514, 11.3222),
    ("EMPOLI", &["EMPOLI (FI)"], 43.7190, 10.9461),
];

const FIRST_NAMES: &[&str] = &[
    "FRANCESCO", "GIUSEPPE", "GIOVANNI", "ANTONIO", "MARIO", "LUIGI", "CARLO", "PIETRO", "PAOLO", "ANDREA",
    "MARCO", "LUCA", "GIORGIO", "ALESSANDRO", "LORENZO", "MATTEO", "NICCOLO", "FILIPPO", "ENRICO", "RAFFAELLO",
    "LEONARDO", "SANDRO", "GUIDO", "DANTE", "CESARE", "EMILIO", "ALDO", "GIACOMO", "DOMENICO", "BENEDETTO",
];

const NEAR_MISS_SURNAMES: &[(&str, &str)] = &[
    ("ROSSI", "ROSSO"),
    ("BIANCHI", "BIANCO"),
    ("FERRARI", "FERRARA"),
    ("RICCI", "RICCIO"),
    ("MARINI", "MARINO"),
    ("GRECO", "GRECI"),
    ("GALLI", "GALLO"),
    ("CONTI", "CONTE"),
    ("MANCINI", "MANCINO"),
    ("LOMBARDI", "LOMBARDO"),
    ("MORETTI", "MORETTO"),
    ("BARBIERI", "BARBIERO"),
    ("FONTANA", "FONTANI"),
    ("SANTORO", "SANTORI"),
    ("MARIANI", "MARIANO"),
    ("RINALDI", "RINALDO"),
    ("CARUSO", "CARUSI"),
    ("VITALE", "VITALI"),
    ("GENTILE", "GENTILI"),
    ("MARTINELLI", "MARTINELLO"),
];

const SURNAMES: &[&str] = &[
    "ESPOSITO", "ROMANO", "COLOMBO", "RUSSO", "BRUNO", "GALLO", "COSTANTINI", "GIORDANO", "RIZZO", "DE SANTIS",
    "MAZZA", "PELLEGRINI", "PALUMBO", "SANNA", "FARINA", "MONTI", "CATTANEO", "MORELLI", "AMATO", "SILVESTRI",
    "MARTINI", "GUERRA", "BELLINI", "VALENTINI", "CASTELLI", "PAGANO", "BASILE", "BENEDETTI", "ORLANDO", "DAMICO",
    "FERRETTI", "BIONDI", "GUIDI", "CAPPELLI", "MELONI", "NERI", "PARISI", "SALA", "TESTA", "VILLA",
    "CARBONE", "CECCHI", "DONATI", "FABBRI", "GATTI", "LEONI", "LUCCHESI", "MAGRI", "NOVELLI", "PACE",
    "PIRAS", "RAGUSA", "SARTI", "TOSI", "URBANI", "VANNUCCI", "ZANETTI", "BARONI", "CORSI", "DINI",
    "FIORI", "GORI", "INNOCENTI", "LANDI", "MASI", "NESI", "ORSINI", "PAOLI", "RAFFAELLI", "SIMONI",
    "TADDEI", "UGOLINI", "VIVIANI", "ZINI", "BALDI", "CIONI", "DEL BENE", "FANTONI", "GIANNINI", "MAGNI",
];

const PLACES: &[&str] = &[
    "DELLA VIGNA NUOVA", "DEI SERVI", "DELLE BELLE DONNE", "DEL GIGLIO", "DEL PARIONE", "DELLA STUFA",
    "DEL PROCONSOLO", "DELLA CONDOTTA", "DEI CALZAIUOLI", "DELL'ARIENTO", "DEI GINORI", "DELLA SCALA",
    "DEL MORO", "DELLE ROSE", "DEI MILLE", "DELLA PERGOLA", "DEL LEONCINO", "DELLA MATTONAIA", "DEI CERCHI",
    "DELLE CASINE", "DEL PRATO", "DELLA FORNACE", "DEI PILASTRI", "DEL CAMPUCCIO", "DELLA CHIESA",
    "DEL SOLE", "DELLA LUNA", "DEI FOSSI", "DEL PURGATORIO", "DELLE OCHE", "DELLA NINNA", "DEI NERLI",
    "DEL TREBBIO", "DELLA SPADA", "DEI TAVOLINI", "DEL CORNO", "DELLA MOSCA", "DEI BENCI", "DEL FIORAIO",
    "DELLE TERME",
];

const SANTA_PLACES: &[&str] = &[
    "SANTA CROCE", "SANTA REPARATA", "SANTA MONACA", "SANTA ELISABETTA", "SANTA CATERINA", "SANTA CHIARA",
    "SANTA LUCIA", "SANTA VERDIANA", "SANTA APOLLONIA", "SANTA MARGHERITA",
];

const CITIES: &[&str] = &[
    "ROMA", "BOLOGNA", "MILANO", "TORINO", "GENOVA", "VENEZIA", "NAPOLI", "PALERMO", "BARI", "TRIESTE",
    "VERONA", "PADOVA", "PARMA", "MODENA", "RAVENNA", "RIMINI", "ANCONA", "PERUGIA", "PESCARA", "TARANTO",
    "CAGLIARI", "SASSARI", "MESSINA", "CATANIA", "BERGAMO", "BRESCIA", "COMO", "MANTOVA", "CREMONA", "PAVIA",
    "NOVARA", "ASTI", "CUNEO", "ALESSANDRIA", "SAVONA", "IMPERIA", "TRENTO", "BOLZANO", "UDINE", "GORIZIA",
];

/// Road names containing a Roman numeral, with the numeral's value.
const ROMAN_NAMES: &[(&str, &str, u32)] = &[
    ("PAPA GIOVANNI XXIII", "XXIII", 23),
    ("PAPA PIO IX", "IX", 9),
    ("UMBERTO I", "I", 1),
    ("VITTORIO EMANUELE II", "II", 2),
    ("XX SETTEMBRE", "XX", 20),
    ("XXVII APRILE", "XXVII", 27),
    ("IV NOVEMBRE", "IV", 4),
    ("XXIV MAGGIO", "XXIV", 24),
    ("GREGORIO VII", "VII", 7),
    ("PAPA LEONE X", "X", 10),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NameShape {
    Person,
    Place,
    Roman(&'static str, u32),
}

#[derive(Debug, Clone)]
struct DraftRoad {
    municipality: usize,
    street: String,
    shape: NameShape,
    civics: Vec<CivicNumber>,
}

fn pick_qualifier(rng: &mut ChaCha8Rng, shape: NameShape) -> &'static str {
    let table: &[(&str, u32)] = match shape {
        NameShape::Person => &[("VIA", 60), ("VIALE", 12), ("PIAZZA", 12), ("LARGO", 8), ("CORSO", 8)],
        NameShape::Place => &[("VIA", 40), ("PIAZZA", 20), ("BORGO", 12), ("PIAZZALE", 12), ("VICOLO", 16)],
        NameShape::Roman(..) => &[("VIA", 50), ("VIALE", 25), ("PIAZZA", 25)],
    };
    table.choose_weighted(rng, |(_, w)| *w).unwrap().0
}

fn last_word(street: &str, table: &QualifierTable) -> String {
    normalize(&RawAddress::new(street, "", ""), table).last_word_key
}

fn draft_roads(rng: &mut ChaCha8Rng, total: usize) -> Result<Vec<DraftRoad>, EvalError> {
    let per_town = MUNICIPALITIES.len();
    let mut roads = Vec::with_capacity(total);
    for m in 0..per_town {
        let count = total / per_town + usize::from(m < total % per_town);
        let mut pool: Vec<(String, NameShape)> = Vec::new();
        let mut surnames: Vec<&str> = SURNAMES.to_vec();
        for (a, b) in NEAR_MISS_SURNAMES {
            surnames.push(a);
            surnames.push(b);
        }
        surnames.sort_unstable();
        surnames.dedup();
        for s in surnames {
            let first = FIRST_NAMES.choose(rng).unwrap();
            pool.push((format!("{first} {s}"), NameShape::Person));
        }
        pool.extend(PLACES.iter().chain(SANTA_PLACES).map(|p| (p.to_string(), NameShape::Place)));
        pool.extend(CITIES.iter().map(|c| (c.to_string(), NameShape::Place)));
        pool.extend(ROMAN_NAMES.iter().map(|&(n, r, v)| (n.to_string(), NameShape::Roman(r, v))));
        if count > pool.len() {
            return Err(EvalError::Spec(format!(
                "{count} roads per municipality exceed the {} available names",
                pool.len()
            )));
        }
        // Keep near-miss pairs together so both members usually exist.
        pool.shuffle(rng);
        pool.sort_by_key(|(name, _)| {
            let last = name.rsplit(' ').next().unwrap_or(name);
            !NEAR_MISS_SURNAMES.iter().any(|(a, b)| *a == last || *b == last)
        });
        for (name, shape) in pool.into_iter().take(count) {
            let qualifier = pick_qualifier(rng, shape);
            let blacks = rng.gen_range(4..=30u32);
            let mut civics: Vec<CivicNumber> = (1..=blacks).map(CivicNumber::black).collect();
            if rng.gen_bool(0.4) {
                civics.extend((1..=rng.gen_range(2..=12u32)).map(CivicNumber::red));
            }
            roads.push(DraftRoad {
                municipality: m,
                street: format!("{qualifier} {name}"),
                shape,
                civics,
            });
        }
    }
    Ok(roads)
}

fn road_iri(base: &str, index: usize) -> Iri {
    Iri::new(format!("{base}/corpus/road/{index}")).unwrap()
}

fn civic_slug(c: &CivicNumber) -> String {
    match c.color {
        crate::address::CivicColor::Red => format!("{}r", c.value.unwrap_or(0)),
        _ => c.value.unwrap_or(0).to_string(),
    }
}

fn number_iri(road: &Iri, c: &CivicNumber) -> Iri {
    Iri::new(format!("{road}/number/{}", civic_slug(c))).unwrap()
}

fn entry_iri(road: &Iri, c: &CivicNumber) -> Iri {
    Iri::new(format!("{road}/entry/{}", civic_slug(c))).unwrap()
}

const ABBREVIATIONS: &[(&str, &[&str])] = &[
    ("PIAZZA", &["P.ZZA", "P.ZA", "PZA"]),
    ("PIAZZALE", &["P.LE", "P.ZZALE"]),
    ("VIALE", &["V.LE"]),
    ("CORSO", &["C.SO"]),
    ("LARGO", &["L.GO"]),
    ("BORGO", &["B.GO"]),
    ("VICOLO", &["V.LO"]),
    ("SANTA", &["S.", "S.TA", "S"]),
];

const LETTERS: &[u8] = b"ABCDEFGHILMNOPRSTUVZ";

fn typo(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let edits = if rng.gen_bool(0.3) { 2 } else { 1 };
    for _ in 0..edits {
        let i = rng.gen_range(0..chars.len());
        match rng.gen_range(0..4) {
            0 => {
                let mut c = LETTERS[rng.gen_range(0..LETTERS.len())] as char;
                if c == chars[i] {
                    c = if c == 'A' { 'E' } else { 'A' };
                }
                chars[i] = c;
            }
            1 if chars.len() > 3 => {
                chars.remove(i);
            }
            2 if i + 1 < chars.len() => chars.swap(i, i + 1),
            _ => chars.insert(i, LETTERS[rng.gen_range(0..LETTERS.len())] as char),
        }
    }
    chars.into_iter().collect()
}

fn noise(rng: &mut ChaCha8Rng, street: &str) -> String {
    let tokens: Vec<&str> = street.split(' ').collect();
    let others = CITIES.choose(rng).unwrap();
    match rng.gen_range(0..6) {
        0 => format!("{street}-"),
        1 => format!("{street} - /"),
        2 => {
            let (q, rest) = street.split_once(' ').unwrap_or(("", street));
            format!("{q} ({rest})").trim().to_string()
        }
        3 => format!("{street}, ANG. VIA {others}"),
        4 => {
            let i = rng.gen_range(1..tokens.len().max(2)).min(tokens.len() - 1);
            let mut t: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
            t[i] = format!("{}°", t[i]);
            t.join(" ")
        }
        _ => format!("{street} ?"),
    }
}

fn roman_variant(street: &str, roman: &str, value: u32) -> String {
    street
        .split(' ')
        .map(|t| if t == roman { value.to_string() } else { t.to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Injector<'a> {
    table: QualifierTable,
    /// Last-word keys of the catalog roads, per municipality.
    last_words: &'a [BTreeSet<String>],
}

impl Injector<'_> {
    /// True when `street` would exactly reconcile to a road other than
    /// `own_last` in municipality `m`.
    fn collides(&self, m: usize, street: &str, own_last: Option<&str>) -> bool {
        let lw = last_word(street, &self.table);
        self.last_words[m].contains(&lw) && Some(lw.as_str()) != own_last
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        &self,
        rng: &mut ChaCha8Rng,
        kind: ErrorKind,
        road: &DraftRoad,
        civic: &CivicNumber,
        own_last: Option<&str>,
        addr: &mut RawAddress,
    ) -> bool {
        let m = road.municipality;
        let street_change = |rng: &mut ChaCha8Rng, f: &dyn Fn(&mut ChaCha8Rng, &str) -> Option<String>| {
            (0..8).find_map(|_| f(rng, &addr.street_text).filter(|s| *s != addr.street_text && !self.collides(m, s, own_last)))
        };
        let changed = match kind {
            ErrorKind::Typo => street_change(rng, &|rng, s| {
                let tokens: Vec<&str> = s.split(' ').collect();
                let eligible: Vec<usize> = (1..tokens.len()).filter(|&i| tokens[i].chars().count() >= 4).collect();
                let &i = eligible.choose(rng)?;
                let mut t: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
                t[i] = typo(rng, &t[i]);
                Some(t.join(" "))
            }),
            ErrorKind::NoiseChars => street_change(rng, &|rng, s| Some(noise(rng, s))),
            ErrorKind::ReorderedName => {
                if road.shape != NameShape::Person {
                    return false;
                }
                street_change(rng, &|_, s| {
                    let mut t: Vec<&str> = s.split(' ').collect();
                    let n = t.len();
                    (n >= 3).then(|| {
                        t.swap(n - 2, n - 1);
                        t.join(" ")
                    })
                })
            }
            ErrorKind::RomanNumeral => {
                let NameShape::Roman(roman, value) = road.shape else { return false };
                street_change(rng, &|_, s| Some(roman_variant(s, roman, value)))
            }
            ErrorKind::AbbreviatedQualifier => street_change(rng, &|rng, s| {
                let tokens: Vec<&str> = s.split(' ').collect();
                let options: Vec<(usize, &[&str])> = tokens
                    .iter()
                    .enumerate()
                    .filter_map(|(i, t)| ABBREVIATIONS.iter().find(|(full, _)| full == t).map(|(_, v)| (i, *v)))
                    .collect();
                let &(i, variants) = options.choose(rng)?;
                let mut t: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
                t[i] = variants.choose(rng)?.to_string();
                Some(t.join(" "))
            }),
            ErrorKind::AliasMunicipality => {
                let aliases = MUNICIPALITIES[m].1;
                let alias = aliases.choose(rng).unwrap();
                addr.municipality = alias.to_string();
                return true;
            }
            ErrorKind::MissingCivic => {
                addr.civic_text = ["", "SNC", "0"].choose(rng).unwrap().to_string();
                return true;
            }
            ErrorKind::MalformedCivic => {
                let Some(v) = civic.value else { return false };
                let red = if civic.color == crate::address::CivicColor::Red { "/R" } else { "" };
                let forms = [format!("{v}/A"), format!("{v}B"), format!("{v}INT.1"), format!("{v} BIS")];
                addr.civic_text = format!("{}{red}", forms.choose(rng).unwrap());
                return true;
            }
            ErrorKind::RedNumber => {
                if civic.color != crate::address::CivicColor::Red {
                    return false;
                }
                let v = civic.value.unwrap_or(0);
                let forms = [format!("{v}R"), format!("{v} R"), format!("{v}/r"), format!("{v}r")];
                addr.civic_text = forms.choose(rng).unwrap().clone();
                return true;
            }
        };
        match changed {
            Some(s) => {
                addr.street_text = s;
                true
            }
            None => false,
        }
    }
}

/// Generates a corpus. Deterministic for a given spec.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_services;
    let n_clean = (spec.clean_rate * n as f64).floor() as usize;
    let n_unrec = (spec.unreconcilable_rate * n as f64).floor() as usize;
    let n_deleted = if n_unrec == 0 { 0 } else { n_unrec.div_ceil(2).max(1) };
    let drafts = draft_roads(&mut rng, spec.n_roads + n_deleted)?;

    // Delete a random subset; the rest forms the catalog.
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.shuffle(&mut rng);
    let deleted: BTreeSet<usize> = order.iter().copied().take(n_deleted).collect();
    let kept: Vec<usize> = (0..drafts.len()).filter(|i| !deleted.contains(i)).collect();
    let deleted: Vec<usize> = deleted.into_iter().collect();

    let table = QualifierTable::seed();
    let mut last_words = vec![BTreeSet::new(); MUNICIPALITIES.len()];
    for &i in &kept {
        last_words[drafts[i].municipality].insert(last_word(&drafts[i].street, &table));
    }
    let roads: Vec<CatalogRoad> = kept
        .iter()
        .map(|&i| {
            let d = &drafts[i];
            let iri = road_iri(&spec.base, i);
            CatalogRoad {
                municipality: MUNICIPALITIES[d.municipality].0.to_string(),
                official_name: d.street.clone(),
                alternative_name: None,
                street_numbers: d
                    .civics
                    .iter()
                    .map(|c| CatalogNumber {
                        iri: number_iri(&iri, c),
                        entry: entry_iri(&iri, c),
                        civic: c.clone(),
                    })
                    .collect(),
                iri,
            }
        })
        .collect();

    let mut kinds: Vec<RecordKind> = std::iter::repeat_n(RecordKind::Clean, n_clean)
        .chain(std::iter::repeat_n(RecordKind::Unreconcilable, n_unrec))
        .chain(std::iter::repeat_n(RecordKind::Dirty, n - n_clean - n_unrec))
        .collect();
    kinds.shuffle(&mut rng);

    let injector = Injector {
        table: table.clone(),
        last_words: &last_words,
    };
    let mut services = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    let mut gold = GoldAlignment::default();
    for (i, kind) in kinds.into_iter().enumerate() {
        let draft_index = match kind {
            RecordKind::Unreconcilable => *deleted.choose(&mut rng).unwrap(),
            _ => *kept.choose(&mut rng).unwrap(),
        };
        let road = &drafts[draft_index];
        let civic = road.civics.choose(&mut rng).unwrap().clone();
        let clean = RawAddress::new(&road.street, &render_civics(std::slice::from_ref(&civic)), MUNICIPALITIES[road.municipality].0);
        let mut addr = clean.clone();
        let mut injected = Vec::new();
        if kind != RecordKind::Clean {
            let own_last = (kind == RecordKind::Dirty).then(|| last_word(&road.street, &table));
            for k in ErrorKind::ALL {
                if rng.gen_bool(spec.rate(k)) && injector.apply(&mut rng, k, road, &civic, own_last.as_deref(), &mut addr) {
                    injected.push(k);
                }
            }
            if kind == RecordKind::Dirty && addr == clean {
                // Force one corruption; noise always applies.
                let mut forced: Vec<ErrorKind> = ErrorKind::ALL.iter().copied().filter(|k| spec.rate(*k) > 0.0).collect();
                forced.shuffle(&mut rng);
                forced.push(ErrorKind::NoiseChars);
                for k in forced {
                    if injector.apply(&mut rng, k, road, &civic, own_last.as_deref(), &mut addr) && addr != clean {
                        injected.push(k);
                        break;
                    }
                }
            }
        }
        let service = Iri::new(format!("{}/corpus/service/{i}", spec.base)).unwrap();
        let (lat, long) = (MUNICIPALITIES[road.municipality].2, MUNICIPALITIES[road.municipality].3);
        let coordinates = rng
            .gen_bool(spec.coordinate_rate)
            .then(|| GeoPoint::new(lat + rng.gen_range(-0.02..0.02), long + rng.gen_range(-0.02..0.02)).unwrap());
        if kind != RecordKind::Unreconcilable {
            let road_iri = road_iri(&spec.base, draft_index);
            gold.entries.insert(
                service.clone(),
                GoldEntry {
                    street_number: Some(number_iri(&road_iri, &civic)),
                    road: road_iri,
                    level: Level::Number,
                },
            );
        }
        services.push(TargetService {
            iri: service.clone(),
            address: addr,
            coordinates,
        });
        records.push(CorpusRecord {
            service,
            kind,
            clean,
            injected,
        });
    }
    let aliases = MUNICIPALITIES
        .iter()
        .flat_map(|(name, aliases, _, _)| aliases.iter().map(move |a| (a.to_string(), name.to_string())))
        .collect();
    Ok(Corpus {
        services,
        roads,
        aliases,
        gold,
        records,
    })
}

/// Links recovered by undoing every corruption: each record's clean
/// address is matched verbatim against the catalog.
pub fn oracle_links(corpus: &Corpus) -> Vec<crate::reconciler::MatchCandidate> {
    let mut by_name: BTreeMap<(String, String), &CatalogRoad> = BTreeMap::new();
    for r in &corpus.roads {
        by_name.insert((municipality_key(&r.municipality), r.official_name.clone()), r);
    }
    corpus
        .records
        .iter()
        .filter_map(|rec| {
            let road = by_name.get(&(municipality_key(&rec.clean.municipality), rec.clean.street_text.clone()))?;
            let civic = crate::address::parse_civic(&rec.clean.civic_text).into_iter().next()?;
            let number = road.street_numbers.iter().find(|n| n.civic == civic)?;
            Some(crate::reconciler::MatchCandidate {
                service: rec.service.clone(),
                road: road.iri.clone(),
                street_number: Some(number.iri.clone()),
                entry: Some(number.entry.clone()),
                level: Level::Number,
                method: crate::reconciler::Method::Manual,
                score: 1.0,
            })
        })
        .collect()
}
