//! Random TOP trees for tests and experiments.
//!
//! [`random_tree`] draws structurally arbitrary trees (any alternation of
//! intents and slots, repeated labels, repeated words). [`grammar_tree`]
//! samples a small compositional navigation/event grammar whose trees look
//! like real task-oriented parses: several intents and slots, slots that
//! repeat within one query, and slots that contain a nested intent.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::top_ir::{SymbolLabel, TopNode, TopTree};

enum Item {
    Word(String),
    Node(String, Vec<Item>),
}

fn build(items: Vec<Item>, next: &mut usize) -> Vec<TopNode> {
    items
        .into_iter()
        .map(|item| match item {
            Item::Word(w) => {
                *next += 1;
                TopNode::token(*next - 1, w)
            }
            Item::Node(name, children) => TopNode::symbol(
                SymbolLabel::new(name).expect("generator labels are valid"),
                build(children, next),
            ),
        })
        .collect()
}

fn into_tree(root: Item) -> TopTree {
    let mut next = 0;
    let root = build(vec![root], &mut next).pop().unwrap();
    TopTree::new(root).expect("generator trees are valid")
}

/// Shape limits for [`random_tree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomTreeConfig {
    /// Maximum number of symbol levels.
    pub max_depth: usize,
    /// Maximum number of children of one symbol.
    pub max_children: usize,
    pub intents: usize,
    pub slots: usize,
    /// Size of the word alphabet; small values force repeated words.
    pub words: usize,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        RandomTreeConfig {
            max_depth: 4,
            max_children: 4,
            intents: 3,
            slots: 4,
            words: 6,
        }
    }
}

/// A uniformly messy valid tree: every symbol covers at least one token.
pub fn random_tree(rng: &mut impl Rng, cfg: &RandomTreeConfig) -> TopTree {
    fn node(rng: &mut impl Rng, cfg: &RandomTreeConfig, intent: bool, depth: usize) -> Item {
        let name = if intent {
            format!("IN:I{}", rng.random_range(0..cfg.intents))
        } else {
            format!("SL:S{}", rng.random_range(0..cfg.slots))
        };
        let n = rng.random_range(1..=cfg.max_children);
        let mut children = Vec::with_capacity(n);
        for _ in 0..n {
            if depth < cfg.max_depth && rng.random_bool(0.4) {
                children.push(node(rng, cfg, !intent, depth + 1));
            } else {
                children.push(Item::Word(format!("w{}", rng.random_range(0..cfg.words))));
            }
        }
        Item::Node(name, children)
    }
    into_tree(node(rng, cfg, true, 1))
}

const CITIES: &[&str] = &[
    "boston", "austin", "denver", "chicago", "seattle", "portland", "miami", "atlanta",
    "dallas", "houston", "phoenix", "tucson", "reno", "fresno", "oakland", "berkeley",
    "detroit", "cleveland", "toledo", "dayton", "omaha", "tulsa", "wichita", "boise",
    "spokane", "tacoma", "eugene", "salem", "provo", "ogden", "madison", "milwaukee",
    "raleigh", "durham", "richmond", "norfolk", "savannah", "orlando", "tampa", "naples",
    "memphis", "nashville", "knoxville", "louisville", "lexington", "columbus", "akron",
    "buffalo", "albany", "syracuse", "ithaca", "hartford", "newark", "trenton", "dover",
    "baltimore", "annapolis", "pittsburgh", "erie", "scranton", "burlington", "concord",
    "portsmouth", "bangor", "augusta", "charleston", "greenville", "asheville", "mobile",
    "jackson", "shreveport", "lafayette", "amarillo", "lubbock", "el paso", "santa fe",
    "san diego", "san jose", "los angeles", "new york", "st louis", "kansas city",
];

const PLACES: &[&str] = &[
    "the airport", "downtown", "work", "the office", "the mall", "the beach", "the stadium",
    "the library", "the station", "the harbor", "the zoo", "the museum", "campus",
    "the hospital", "the park", "the lake", "the pier", "uptown", "midtown", "the suburbs",
];

const CATEGORIES: &[&str] = &[
    "concerts", "festivals", "parades", "movies", "comedy shows", "art fairs", "food trucks",
    "farmers markets", "plays", "operas", "ballets", "fireworks", "car shows", "book fairs",
    "wine tastings", "jazz nights", "street fairs", "rodeos", "marathons", "craft fairs",
    "poetry readings", "trivia nights", "open mics", "flea markets", "boat shows",
];

const EVENT_CATEGORIES: &[&str] = &[
    "concert", "festival", "parade", "movie", "game", "show", "play", "market", "fair", "race",
];

const EVENT_NAMES: &[&str] = &[
    "lollapalooza", "coachella", "bonnaroo", "mardi gras", "the county fair", "the state fair",
    "the jazz festival", "the blues festival", "the film festival", "the book festival",
    "the harvest festival", "the boat parade", "the air show", "the auto show", "comic con",
    "the chili cookoff", "the pumpkin festival", "the tulip festival", "the rodeo",
    "the marathon", "the regatta", "the fun run", "the light show", "the lantern festival",
    "the food festival", "the beer festival", "the wine festival", "the craft show",
    "the flower show", "the dog show",
];

const LOCATION_CATEGORIES: &[&str] = &[
    "gas station", "coffee shop", "pharmacy", "grocery store", "parking garage", "bank",
    "hotel", "gym", "hardware store", "pizza place", "bakery", "car wash", "post office",
    "bookstore", "taco stand",
];

const WEEKDAYS: &[&str] = &[
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const ROAD_NAMES: &[&str] = &[
    "main street", "broadway", "elm street", "oak avenue", "park avenue", "market street",
    "the bay bridge", "the tunnel", "the parkway", "the beltway", "the turnpike",
    "river road", "lake shore drive", "ocean drive", "the causeway",
];

fn words(s: &str) -> Vec<Item> {
    s.split_whitespace().map(|w| Item::Word(w.to_string())).collect()
}

fn pick<'a>(rng: &mut impl Rng, list: &[&'a str]) -> &'a str {
    list.choose(rng).expect("non-empty list")
}

fn date_time(rng: &mut impl Rng) -> Vec<Item> {
    let text = match rng.random_range(0..10) {
        0 => pick(rng, &["today", "tonight", "tomorrow", "now", "later"]).to_string(),
        1 => pick(rng, &["this weekend", "next week", "this week", "next weekend"]).to_string(),
        2 => format!("on {}", pick(rng, WEEKDAYS)),
        3 => format!("this {}", pick(rng, WEEKDAYS)),
        4 => format!("next {}", pick(rng, WEEKDAYS)),
        5 => format!("at {} {}", rng.random_range(1..=12), pick(rng, &["am", "pm"])),
        6 => format!("{} {}", pick(rng, WEEKDAYS), pick(rng, &["morning", "afternoon", "night"])),
        7 => format!("on {} {}", pick(rng, MONTHS), rng.random_range(1..=28)),
        8 => format!("in {}", pick(rng, MONTHS)),
        _ => format!("tomorrow at {}", rng.random_range(1..=12)),
    };
    words(&text)
}

fn road(rng: &mut impl Rng) -> Vec<Item> {
    let text = match rng.random_range(0..3) {
        0 => format!("i {}", rng.random_range(1..=99)),
        1 => format!("route {}", rng.random_range(1..=99)),
        _ => pick(rng, ROAD_NAMES).to_string(),
    };
    words(&text)
}

fn slot(name: &str, children: Vec<Item>) -> Item {
    Item::Node(format!("SL:{name}"), children)
}

fn intent(name: &str, children: Vec<Item>) -> Item {
    Item::Node(format!("IN:{name}"), children)
}

/// Filler for a destination or source: a plain place or a nested intent.
fn place(rng: &mut impl Rng) -> Vec<Item> {
    match rng.random_range(0..10) {
        0..=3 => words(pick(rng, CITIES)),
        4..=5 => words(pick(rng, PLACES)),
        6..=7 => {
            let mut inner = words("the");
            inner.push(slot("CATEGORY_EVENT", words(pick(rng, EVENT_CATEGORIES))));
            if rng.random_bool(0.5) {
                inner.push(slot("DATE_TIME", date_time(rng)));
            }
            vec![intent("GET_EVENT", inner)]
        }
        _ => {
            let mut inner = words(pick(rng, &["the nearest", "a", "the closest"]));
            inner.push(slot("CATEGORY_LOCATION", words(pick(rng, LOCATION_CATEGORIES))));
            vec![intent("GET_LOCATION", inner)]
        }
    }
}

fn fill(rng: &mut impl Rng, name: &str) -> Item {
    let children = match name {
        "DATE_TIME" => date_time(rng),
        "LOCATION" => words(pick(rng, CITIES)),
        "CATEGORY_EVENT" => words(pick(rng, CATEGORIES)),
        "NAME_EVENT" => words(pick(rng, EVENT_NAMES)),
        "ROAD" => road(rng),
        "DESTINATION" | "SOURCE" => place(rng),
        _ => unreachable!("unknown slot {name}"),
    };
    slot(name, children)
}

const TEMPLATES: &[(&str, &[&str])] = &[
    (
        "GET_EVENT",
        &[
            "show me {CATEGORY_EVENT} {DATE_TIME}",
            "any {CATEGORY_EVENT} in {LOCATION}",
            "what {CATEGORY_EVENT} are happening in {LOCATION} {DATE_TIME}",
            "are there {CATEGORY_EVENT} {DATE_TIME} or {DATE_TIME}",
            "find tickets for {NAME_EVENT}",
            "when is {NAME_EVENT}",
            "is {NAME_EVENT} in {LOCATION} {DATE_TIME}",
        ],
    ),
    (
        "GET_DIRECTIONS",
        &[
            "directions to {DESTINATION}",
            "how do i get to {DESTINATION} from {SOURCE}",
            "take me to {DESTINATION} avoiding {ROAD}",
            "fastest route from {SOURCE} to {DESTINATION}",
            "navigate to {DESTINATION} {DATE_TIME}",
        ],
    ),
    (
        "GET_WEATHER",
        &[
            "weather in {LOCATION} {DATE_TIME}",
            "will it rain {DATE_TIME}",
            "is it cold in {LOCATION} {DATE_TIME} or {DATE_TIME}",
            "forecast for {LOCATION}",
        ],
    ),
    (
        "GET_INFO_TRAFFIC",
        &[
            "traffic on {ROAD} {DATE_TIME}",
            "is there traffic to {DESTINATION}",
            "how bad is traffic near {LOCATION}",
            "any accidents on {ROAD} or {ROAD}",
        ],
    ),
    (
        "GET_ESTIMATED_DURATION",
        &[
            "how long to drive to {DESTINATION}",
            "how long from {SOURCE} to {DESTINATION} {DATE_TIME}",
            "how long will it take to get to {DESTINATION}",
        ],
    ),
];

/// One query from the compositional grammar. Intent and template are chosen
/// uniformly; at most four symbol levels occur.
pub fn grammar_tree(rng: &mut impl Rng) -> TopTree {
    let (name, templates) = TEMPLATES.choose(rng).expect("templates");
    let template = pick(rng, templates);
    let mut children = Vec::new();
    for part in template.split_whitespace() {
        match part.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            Some(s) => children.push(fill(rng, s)),
            None => children.push(Item::Word(part.to_string())),
        }
    }
    into_tree(intent(name, children))
}
