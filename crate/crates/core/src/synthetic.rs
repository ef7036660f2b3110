//! Seeded generators for planted community graphs and the bundled sample corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::coauthor::CoauthorGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn add_clique(g: &mut CoauthorGraph, members: &[String]) {
    for (i, a) in members.iter().enumerate() {
        g.add_node(a);
        for b in &members[i + 1..] {
            g.add_edge(a, b, 1);
        }
    }
}

/// Disjoint cliques of the given sizes, nodes named `k{clique}_{member}`.
pub fn clique_graph(sizes: &[usize]) -> CoauthorGraph {
    let mut g = CoauthorGraph::new();
    for (c, &size) in sizes.iter().enumerate() {
        let members: Vec<String> = (0..size).map(|m| format!("k{c:02}_{m:03}")).collect();
        add_clique(&mut g, &members);
    }
    g
}

/// Two dense communities that overlap in `shared` authors.
///
/// The cores are cliques of `core_a` and `core_b` authors; each shared
/// author is linked to every core author on both sides but not to the other
/// shared authors. Community sizes are `core_a + shared` and `core_b + shared`.
pub fn two_community_graph(core_a: usize, core_b: usize, shared: usize) -> CoauthorGraph {
    let a: Vec<String> = (0..core_a).map(|i| format!("a{i:03}")).collect();
    let b: Vec<String> = (0..core_b).map(|i| format!("b{i:03}")).collect();
    let s: Vec<String> = (0..shared).map(|i| format!("s{i:03}")).collect();
    let mut g = CoauthorGraph::new();
    add_clique(&mut g, &a);
    add_clique(&mut g, &b);
    for x in &s {
        for y in a.iter().chain(&b) {
            g.add_edge(x, y, 1);
        }
    }
    g
}

#[derive(Debug, Clone)]
pub struct PlantedCliques {
    pub graph: CoauthorGraph,
    pub cliques: Vec<BTreeSet<String>>,
    /// Shared author → the two cliques holding it.
    pub shared: BTreeMap<String, (usize, usize)>,
}

/// `k` cliques with sizes drawn from `sizes`, attached as a forest: a new
/// clique shares at most one author with one earlier clique, and no author
/// is shared more than once. Author names are shuffled so clique members
/// are not contiguous in key order.
pub fn planted_cliques<R: Rng>(rng: &mut R, k: usize, sizes: RangeInclusive<usize>) -> PlantedCliques {
    let size_list: Vec<usize> = (0..k).map(|_| rng.random_range(sizes.clone())).collect();
    let total: usize = size_list.iter().sum();
    let mut names: Vec<String> = (0..total).map(|i| format!("author {i:04}")).collect();
    names.shuffle(rng);
    let mut fresh = names.into_iter();

    let mut cliques: Vec<Vec<String>> = Vec::new();
    let mut shared: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut used_as_shared: BTreeSet<String> = BTreeSet::new();
    for (i, &size) in size_list.iter().enumerate() {
        let mut members = Vec::with_capacity(size);
        if i > 0 && rng.random_bool(0.8) {
            let host = rng.random_range(0..i);
            let candidates: Vec<&String> = cliques[host].iter().filter(|m| !used_as_shared.contains(*m)).collect();
            if let Some(&pick) = candidates.choose(rng) {
                let pick = pick.clone();
                used_as_shared.insert(pick.clone());
                shared.insert(pick.clone(), (host, i));
                members.push(pick);
            }
        }
        while members.len() < size {
            members.push(fresh.next().expect("enough names"));
        }
        cliques.push(members);
    }

    let mut graph = CoauthorGraph::new();
    for c in &cliques {
        add_clique(&mut graph, c);
    }
    PlantedCliques {
        graph,
        cliques: cliques.into_iter().map(|c| c.into_iter().collect()).collect(),
        shared,
    }
}

struct Lab {
    affiliation: &'static str,
    topics: &'static [&'static str],
    entities: &'static [&'static str],
    population: &'static [&'static str],
    intervention: &'static [&'static str],
    outcome: &'static [&'static str],
    journals: &'static [&'static str],
}

const LABS: &[Lab] = &[
    Lab {
        affiliation: "Institut Pasteur",
        topics: &["virology", "antiviral drugs", "drug repurposing", "coronavirus"],
        entities: &["chloroquine", "hydroxychloroquine", "remdesivir", "SARS-CoV-2", "Vero E6"],
        population: &["hospitalized adults", "cell culture"],
        intervention: &["chloroquine", "hydroxychloroquine", "remdesivir"],
        outcome: &["viral load", "viral replication"],
        journals: &["Antiviral Research", "Journal of Virology"],
    },
    Lab {
        affiliation: "Johns Hopkins University",
        topics: &["epidemiology", "transmission dynamics", "data science", "coronavirus"],
        entities: &["SARS-CoV-2", "MERS-CoV", "influenza", "pneumonia"],
        population: &["general population", "healthcare workers"],
        intervention: &["social distancing", "contact tracing"],
        outcome: &["reproduction number", "incidence"],
        journals: &["Lancet Infectious Diseases", "Epidemics"],
    },
    Lab {
        affiliation: "University of Hong Kong",
        topics: &["virology", "medical microbiology", "zoonosis", "coronavirus"],
        entities: &["MERS-CoV", "SARS-CoV", "ACE2", "TMPRSS2", "pneumonia"],
        population: &["camels", "bats"],
        intervention: &["serological testing"],
        outcome: &["seroprevalence", "viral shedding"],
        journals: &["Emerging Infectious Diseases", "Journal of Virology"],
    },
    Lab {
        affiliation: "Scripps Research",
        topics: &["epitopes", "structural biology", "antibodies", "vaccine design"],
        entities: &["CR3022", "spike protein", "ACE2", "receptor binding domain", "SARS-CoV-2"],
        population: &["convalescent patients"],
        intervention: &["monoclonal antibodies", "convalescent plasma"],
        outcome: &["neutralization", "binding affinity"],
        journals: &["Science", "Nature"],
    },
    Lab {
        affiliation: "Karolinska Institutet",
        topics: &["immunology", "cytokines", "inflammation", "antibodies"],
        entities: &["TNF", "IL-6", "interferon", "ERK1/2", "cytokine storm"],
        population: &["critically ill patients", "immunocompromised patients"],
        intervention: &["tocilizumab", "corticosteroids"],
        outcome: &["mortality", "ICU admission"],
        journals: &["Journal of Immunology", "Frontiers in Immunology"],
    },
    Lab {
        affiliation: "Mayo Clinic",
        topics: &["clinical trials", "antiviral drugs", "transplantation", "hepatology"],
        entities: &["ribavirin", "interferon", "liver injury", "respiratory syncytial virus", "hepatitis C"],
        population: &["immunocompromised patients", "transplant recipients"],
        intervention: &["ribavirin", "interferon alfa"],
        outcome: &["mortality", "liver injury"],
        journals: &["Clinical Infectious Diseases", "Transplantation"],
    },
    Lab {
        affiliation: "Wuhan University",
        topics: &["clinical characteristics", "pneumonia", "radiology", "coronavirus"],
        entities: &["SARS-CoV-2", "pneumonia", "lymphocytes", "IL-6", "ARDS"],
        population: &["hospitalized adults", "children"],
        intervention: &["oxygen therapy", "corticosteroids"],
        outcome: &["mortality", "length of stay"],
        journals: &["Lancet", "JAMA"],
    },
    Lab {
        affiliation: "University of Oxford",
        topics: &["vaccine design", "clinical trials", "immunology", "antibodies"],
        entities: &["ChAdOx1", "spike protein", "T cells", "SARS-CoV-2"],
        population: &["healthy volunteers", "older adults"],
        intervention: &["vaccination"],
        outcome: &["immunogenicity", "adverse events"],
        journals: &["Lancet", "Nature Medicine"],
    },
];

const GAZETTEER: &[(&str, &str, &str)] = &[
    ("chloroquine", "chloroquine", "drug"),
    ("hydroxychloroquine", "hydroxychloroquine", "drug"),
    ("remdesivir", "remdesivir", "drug"),
    ("ribavirin", "ribavirin", "drug"),
    ("tocilizumab", "tocilizumab", "drug"),
    ("corticosteroids", "corticosteroids", "drug"),
    ("ChAdOx1", "chadox1", "drug"),
    ("CR3022", "cr3022", "protein"),
    ("spike protein", "spike protein", "protein"),
    ("receptor binding domain", "receptor binding domain", "protein"),
    ("ACE2", "ace2", "protein"),
    ("TNF", "tnf", "protein"),
    ("IL-6", "il-6", "protein"),
    ("interferon", "interferon", "protein"),
    ("ERK1/2", "erk1/2", "protein"),
    ("Vero E6", "vero e6", "cell"),
    ("T cells", "t cells", "cell"),
    ("lymphocytes", "lymphocytes", "cell"),
    ("Calu-3", "calu-3", "cell"),
    ("SARS-CoV-2", "sars-cov-2", "disease"),
    ("SARS-CoV", "sars-cov", "disease"),
    ("MERS-CoV", "mers-cov", "disease"),
    ("MERS", "mers-cov", "disease"),
    ("influenza", "influenza", "disease"),
    ("pneumonia", "pneumonia", "disease"),
    ("liver injury", "liver injury", "disease"),
    ("liver damage", "liver injury", "disease"),
    ("hepatitis C", "hepatitis c", "disease"),
    ("respiratory syncytial virus", "respiratory syncytial virus", "disease"),
    ("cytokine storm", "cytokine storm", "disease"),
    ("ARDS", "ards", "disease"),
    ("ORF1ab", "orf1ab", "gene"),
    ("TMPRSS2", "tmprss2", "gene"),
];

const FIRST: &[&str] = &[
    "Anna", "Bo", "Carlos", "Dana", "Elif", "Farid", "Grace", "Hiro", "Ines", "Jun", "Kofi", "Lena", "Marco", "Nadia",
    "Omar", "Priya", "Quentin", "Rosa", "Sven", "Tara", "Umar", "Vera", "Wei", "Xenia", "Yusuf", "Zoe",
];
const LAST: &[&str] = &[
    "Albrecht", "Banerjee", "Castillo", "Dupont", "Eriksson", "Fujita", "Garcia", "Haddad", "Ivanova", "Jensen",
    "Kowalski", "Lindqvist", "Moreau", "Nakamura", "Okafor", "Petrov", "Quispe", "Rossi", "Schmidt", "Tanaka",
    "Ueda", "Vargas", "Wang", "Xu", "Yilmaz", "Zhang",
];

fn gazetteer_type(surface: &str) -> &'static str {
    GAZETTEER.iter().find(|(s, _, _)| *s == surface).map_or("disease", |(_, _, t)| *t)
}

/// The gazetteer TSV matching [`sample_corpus`].
pub fn sample_gazetteer() -> String {
    let mut out = String::from("# surface_term\tcanonical_id\tentity_type\n");
    for (s, id, t) in GAZETTEER {
        out.push_str(&format!("{s}\t{id}\t{t}\n"));
    }
    out
}

/// A deterministic JSONL corpus of `n_papers` synthetic papers written by a
/// handful of labs, with a few bridge authors, stray small components, a
/// consortium paper and some author-less papers.
pub fn sample_corpus(seed: u64, n_papers: usize) -> String {
    let mut rng = rng(seed);
    let mut name_pool: Vec<String> = FIRST
        .iter()
        .flat_map(|f| LAST.iter().map(move |l| format!("{f} {l}")))
        .collect();
    name_pool.shuffle(&mut rng);
    let mut names = name_pool.into_iter();

    let lab_authors: Vec<Vec<String>> = LABS
        .iter()
        .map(|_| {
            let size = rng.random_range(9..=15);
            (0..size).map(|_| names.next().unwrap()).collect()
        })
        .collect();
    // authors publishing with two neighboring labs, chaining all labs together
    let bridges: Vec<(String, usize, usize)> = (0..LABS.len() - 1)
        .map(|i| (names.next().unwrap(), i, i + 1))
        .collect();
    let strays: Vec<[String; 2]> = (0..3).map(|_| [names.next().unwrap(), names.next().unwrap()]).collect();

    let mut lines = Vec::with_capacity(n_papers);
    for p in 0..n_papers {
        let paper_id = format!("paper-{p:04}");
        let li = rng.random_range(0..LABS.len());
        let lab = &LABS[li];
        let year = if rng.random_bool(0.8) {
            rng.random_range(2017..=2021)
        } else {
            rng.random_range(2008..=2016)
        };

        let mut authors: Vec<String> = Vec::new();
        let team = &lab_authors[li];
        if rng.random_bool(0.75) {
            authors.push(team[0].clone());
        }
        let extra = rng.random_range(1..=4);
        for a in team.choose_multiple(&mut rng, extra) {
            if !authors.contains(a) {
                authors.push(a.clone());
            }
        }
        for (b, l1, l2) in &bridges {
            if (*l1 == li || *l2 == li) && rng.random_bool(0.25) {
                authors.push(b.clone());
            }
        }
        let mut affiliations = vec![lab.affiliation.to_string()];

        if p % 67 == 5 {
            authors = strays[(p / 67) % strays.len()].to_vec();
            affiliations = vec!["Independent Researcher".to_string()];
        }
        if p == n_papers / 2 {
            authors = lab_authors.iter().flatten().take(60).cloned().collect();
            affiliations = LABS.iter().map(|l| l.affiliation.to_string()).collect();
        }
        if p % 41 == 7 {
            authors.clear();
        }

        let e: Vec<&str> = lab.entities.choose_multiple(&mut rng, 3).copied().collect();
        let title = format!("{} and {} in {}", e[0], e[1], lab.topics[0]);
        let mut sentences = vec![
            format!("We studied {} together with {}.", e[0], e[1]),
            format!("The role of {} was examined in {} cohorts.", e[2], lab.topics[p % lab.topics.len()]),
        ];
        if rng.random_bool(0.5) {
            sentences.push(format!("Fig. 2 shows that {} correlates with {}.", e[1], e[2]));
        }
        if li == 5 && rng.random_bool(0.5) {
            sentences.push("Ribavirin was associated with liver damage in some patients.".to_string());
        }
        if li == 0 && rng.random_bool(0.3) {
            sentences.push("Chloroquine and ribavirin were compared in Vero E6 cells.".to_string());
        }
        sentences.push("Further studies are needed.".to_string());

        let mut topics: Vec<&str> = lab.topics.choose_multiple(&mut rng, 2).copied().collect();
        if rng.random_bool(0.3) {
            topics.push("covid-19");
        }
        let intervention: Vec<&str> = lab.intervention.choose_multiple(&mut rng, 1).copied().collect();
        let mut population: Vec<&str> = lab.population.choose_multiple(&mut rng, 1).copied().collect();
        if intervention.contains(&"ribavirin") && !population.contains(&"immunocompromised patients") {
            population.push("immunocompromised patients");
        }
        let outcome: Vec<&str> = lab.outcome.choose_multiple(&mut rng, 1).copied().collect();

        let mut record = json!({
            "paper_id": paper_id,
            "title": title,
            "abstract": sentences.join(" "),
            "authors": authors,
            "affiliations": affiliations,
            "journal": lab.journals[p % lab.journals.len()],
            "year": year,
            "facets": {"population": population, "intervention": intervention, "outcome": outcome},
            "topics": topics,
        });
        if p % 53 == 11 {
            record["entities"] = json!([
                {"text": e[0], "id": e[0].to_lowercase(), "type": gazetteer_type(e[0])},
                {"text": e[1], "id": e[1].to_lowercase(), "type": gazetteer_type(e[1])},
            ]);
        }
        lines.push(record.to_string());
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
