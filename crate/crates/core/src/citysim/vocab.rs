//! Query text templates and the search-result page catalog.
//!
//! Symptom texts (issued by ill users) and health-adjacent texts (issued by
//! healthy users) never coincide: every health-adjacent text carries one of
//! the marker phrases, and no symptom template uses a marker word.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::logdata::ResultPage;
use crate::wsm::FOODBORNE_TAG;

#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    pub symptoms: Vec<String>,
    pub leads: Vec<String>,
    pub contexts: Vec<String>,
    pub suffixes: Vec<String>,
    pub confuser_topics: Vec<String>,
    /// Marker phrase and the page family its results come from.
    pub confuser_markers: Vec<(String, PageFamily)>,
    pub background_templates: Vec<(String, Vec<String>)>,
    /// Optional trailing words on background texts.
    pub background_modifiers: Vec<String>,
}

/// Families of result pages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageFamily {
    Foodborne,
    Digestive,
    News,
    Pets,
    Prevention,
    General,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_string()).collect()
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab {
            symptoms: strings(&[
                "food poisoning",
                "food posioning",
                "foodpoisoning",
                "diarrhea",
                "diarrhoea",
                "diarea",
                "vomiting",
                "vomitting",
                "throwing up",
                "nausea",
                "nausious",
                "stomach cramps",
                "stomach ache",
                "stomache pain",
                "upset stomach",
                "stomach bug",
                "stomach flu",
                "cramps and diarrhea",
                "fever and vomiting",
                "chills and nausea",
                "sick to my stomach",
                "bad stomach pain",
                "salmonella symptoms",
                "e coli symptoms",
            ]),
            leads: strings(&[
                "",
                "",
                "",
                "why am i",
                "cant stop",
                "how to stop",
                "my husband",
                "my kid has",
                "is it",
                "help",
            ]),
            contexts: strings(&[
                "after eating out",
                "after eating",
                "after dinner",
                "after lunch",
                "after restaurant",
                "after sushi",
                "after chicken",
                "after burger",
                "after tacos",
                "after buffet",
                "after seafood",
                "last night",
                "all night",
                "since yesterday",
                "since this morning",
                "for 2 days",
                "for 24 hours",
                "wont stop",
                "at night",
                "and fever",
                "and headache",
                "and chills",
                "and body aches",
                "no fever",
                "how long does it last",
                "what to eat",
                "what to do",
                "when to see a doctor",
                "remedy",
                "home remedies",
            ]),
            suffixes: strings(&["", "", "", "", " help", " fast", " adult", " toddler", " pregnant", " please"]),
            confuser_topics: strings(&[
                "food poisoning",
                "salmonella",
                "e coli",
                "norovirus",
                "listeria",
                "diarrhea",
                "vomiting",
                "stomach flu",
            ]),
            confuser_markers: vec![
                ("recall".into(), PageFamily::News),
                ("outbreak news".into(), PageFamily::News),
                ("lawsuit".into(), PageFamily::News),
                ("statistics".into(), PageFamily::News),
                ("in dogs".into(), PageFamily::Pets),
                ("in cats".into(), PageFamily::Pets),
                ("puppy".into(), PageFamily::Pets),
                ("prevention tips".into(), PageFamily::Prevention),
                ("certification course".into(), PageFamily::Prevention),
                ("vaccine".into(), PageFamily::Prevention),
                ("movie".into(), PageFamily::General),
                ("song lyrics".into(), PageFamily::General),
                ("history".into(), PageFamily::General),
                ("definition".into(), PageFamily::General),
                ("research paper".into(), PageFamily::General),
                ("essay".into(), PageFamily::General),
            ],
            background_templates: vec![
                (
                    "weather {}".into(),
                    strings(&["today", "tomorrow", "this weekend", "radar", "hourly", "forecast", "alerts", "tonight"]),
                ),
                (
                    "{} restaurants near me".into(),
                    strings(&[
                        "thai", "mexican", "sushi", "pizza", "indian", "italian", "vegan", "chinese", "bbq", "ramen",
                        "korean", "greek",
                    ]),
                ),
                (
                    "{} recipe".into(),
                    strings(&[
                        "banana bread",
                        "lasagna",
                        "chili",
                        "pancake",
                        "guacamole",
                        "meatball",
                        "fried rice",
                        "brownie",
                        "salsa",
                        "pot roast",
                        "pad thai",
                        "cornbread",
                    ]),
                ),
                (
                    "{} score".into(),
                    strings(&[
                        "lakers", "yankees", "packers", "cubs", "warriors", "patriots", "dodgers", "bulls", "raiders",
                        "knights",
                    ]),
                ),
                (
                    "how to {}".into(),
                    strings(&[
                        "tie a tie",
                        "boil eggs",
                        "change a tire",
                        "screenshot on mac",
                        "unclog a drain",
                        "write a resume",
                        "lose weight",
                        "plant tomatoes",
                        "fix a leaky faucet",
                        "clean an oven",
                        "reset iphone",
                        "invest in stocks",
                    ]),
                ),
                (
                    "{} price".into(),
                    strings(&[
                        "iphone", "gas", "bitcoin", "ps4", "gold", "tesla", "airpods", "macbook", "kindle", "xbox",
                    ]),
                ),
                ("{} showtimes".into(), strings(&["movie theater", "imax", "cinema", "drive in"])),
                (
                    "{} hours".into(),
                    strings(&[
                        "costco",
                        "walmart",
                        "target",
                        "post office",
                        "dmv",
                        "bank",
                        "library",
                        "pharmacy",
                        "home depot",
                    ]),
                ),
                (
                    "cheap flights to {}".into(),
                    strings(&["chicago", "las vegas", "new york", "miami", "denver", "seattle", "boston", "orlando"]),
                ),
                (
                    "{} lyrics".into(),
                    strings(&[
                        "hello",
                        "shape of you",
                        "hotline bling",
                        "closer",
                        "sorry",
                        "stressed out",
                        "one dance",
                        "cheap thrills",
                    ]),
                ),
                (
                    "{}".into(),
                    strings(&[
                        "dentist",
                        "plumber",
                        "car wash",
                        "gym",
                        "hair salon",
                        "barber",
                        "vet clinic",
                        "urgent care",
                        "apartments",
                        "hotels",
                        "gas station",
                        "laundromat",
                        "bike shop",
                        "bookstore",
                        "florist",
                        "daycare",
                        "storage units",
                        "auto repair",
                        "yoga studio",
                        "nail salon",
                    ]),
                ),
                (
                    "{} stock".into(),
                    strings(&[
                        "apple",
                        "amazon",
                        "netflix",
                        "google",
                        "facebook",
                        "nike",
                        "ford",
                        "boeing",
                        "starbucks",
                        "disney",
                    ]),
                ),
                (
                    "{} jobs".into(),
                    strings(&[
                        "nursing",
                        "teaching",
                        "remote",
                        "part time",
                        "warehouse",
                        "driver",
                        "engineering",
                        "retail",
                        "security",
                        "sales",
                    ]),
                ),
            ],
            background_modifiers: strings(&[
                "2016",
                "online",
                "near me",
                "reviews",
                "cheap",
                "best",
                "open now",
                "for sale",
                "coupon",
                "reddit",
                "youtube",
                "wiki",
                "app",
                "login",
                "phone number",
                "map",
                "tickets",
                "schedule",
                "today",
                "deals",
                "free",
                "2017",
                "used",
                "rental",
                "directions",
            ]),
        }
    }
}

impl Vocab {
    /// Words that appear only in health-adjacent texts.
    pub fn marker_words(&self) -> BTreeSet<String> {
        self.confuser_markers.iter().flat_map(|(m, _)| crate::wsm::tokenize(m)).collect()
    }

    pub fn symptom_text<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let symptom = self.symptoms.choose(rng).map_or("", String::as_str);
        let lead = self.leads.choose(rng).map_or("", String::as_str);
        let suffix = self.suffixes.choose(rng).map_or("", String::as_str);
        let mut text = String::new();
        if !lead.is_empty() {
            text.push_str(lead);
            text.push(' ');
        }
        text.push_str(symptom);
        // One in five symptom texts is the bare symptom phrase.
        if rng.random::<f64>() >= 0.2 {
            if let Some(c) = self.contexts.choose(rng) {
                text.push(' ');
                text.push_str(c);
            }
        }
        text.push_str(suffix);
        text
    }

    pub fn confuser_text<R: Rng + ?Sized>(&self, rng: &mut R) -> (String, PageFamily) {
        let topic = self.confuser_topics.choose(rng).map_or("", String::as_str);
        let (marker, family) =
            self.confuser_markers.choose(rng).cloned().unwrap_or((String::new(), PageFamily::General));
        let tail = ["", "", " 2016", " cdc", " wiki", " reddit"].choose(rng).copied().unwrap_or("");
        (format!("{topic} {marker}{tail}"), family)
    }

    pub fn background_text<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let Some((template, fills)) = self.background_templates.choose(rng) else { return String::new() };
        let fill = fills.choose(rng).map_or("", String::as_str);
        let text = template.replacen("{}", fill, 1);
        match self.background_modifiers.choose(rng) {
            Some(m) if rng.random_bool(0.6) => format!("{text} {m}"),
            _ => text,
        }
    }
}

/// Catalog entries: (url, title, snippet, tags).
type PageSpec = (&'static str, &'static str, &'static str, &'static [&'static str]);

const FOODBORNE_PAGES: &[PageSpec] = &[
    ("https://www.cdc.gov/foodsafety/symptoms.html", "Symptoms of Food Poisoning | CDC", "Common symptoms include upset stomach, stomach cramps, nausea, vomiting, diarrhea and fever after eating contaminated food.", &[FOODBORNE_TAG, "symptoms"]),
    ("https://en.wikipedia.org/wiki/Foodborne_illness", "Foodborne illness - Wikipedia", "Foodborne illness is any illness resulting from eating contaminated food, pathogenic bacteria, viruses or parasites.", &[FOODBORNE_TAG]),
    ("https://www.mayoclinic.org/diseases-conditions/food-poisoning/symptoms-causes", "Food poisoning - Symptoms and causes - Mayo Clinic", "Food poisoning symptoms can start within hours of eating contaminated food and often include nausea, vomiting or diarrhea.", &[FOODBORNE_TAG, "symptoms"]),
    ("https://www.foodsafety.gov/food-poisoning", "Food Poisoning | FoodSafety.gov", "Learn the signs of food poisoning, when to see a doctor and how long symptoms usually last.", &[FOODBORNE_TAG]),
    ("https://www.healthline.com/health/food-poisoning", "Food Poisoning: Symptoms, Causes and Treatment", "Most cases of food poisoning resolve within a few days; drink fluids and rest while the stomach recovers.", &[FOODBORNE_TAG, "treatment"]),
    ("https://www.webmd.com/food-recipes/food-poisoning/what-is-food-poisoning", "What Is Food Poisoning? Causes and Treatment - WebMD", "Food poisoning happens when you eat food contaminated with germs. Symptoms include cramps, vomiting and diarrhea.", &[FOODBORNE_TAG]),
    ("https://www.nhs.uk/conditions/food-poisoning/", "Food poisoning - NHS", "Check if you have food poisoning, how to treat it yourself and when to get medical help.", &[FOODBORNE_TAG, "treatment"]),
    ("https://www.medicalnewstoday.com/articles/food-poisoning", "Food poisoning: Causes, symptoms and recovery", "Bacteria such as salmonella and e coli are common causes; symptoms usually appear one to three days after eating.", &[FOODBORNE_TAG, "symptoms"]),
];

const DIGESTIVE_PAGES: &[PageSpec] = &[
    (
        "https://www.mayoclinic.org/diseases-conditions/viral-gastroenteritis",
        "Viral gastroenteritis (stomach flu) - Mayo Clinic",
        "Stomach flu is an intestinal infection marked by watery diarrhea, abdominal cramps, nausea or vomiting.",
        &["gastroenteritis"],
    ),
    (
        "https://www.webmd.com/digestive-disorders/diarrhea-treatments",
        "Diarrhea Treatments and Home Remedies",
        "Drink plenty of fluids, try bland foods and rest. See a doctor if diarrhea lasts more than two days.",
        &["digestive_health"],
    ),
    (
        "https://www.healthline.com/health/nausea-remedies",
        "Remedies for Nausea and Vomiting",
        "Ginger, peppermint and small sips of water can help settle an upset stomach.",
        &["digestive_health"],
    ),
    (
        "https://www.medlineplus.gov/stomachache",
        "Abdominal pain | MedlinePlus",
        "Abdominal pain can have many causes including gas, indigestion, stomach flu and food intolerance.",
        &["digestive_health"],
    ),
    (
        "https://www.cdc.gov/norovirus/about",
        "About Norovirus | CDC",
        "Norovirus is a very contagious virus that causes vomiting and diarrhea and spreads easily between people.",
        &["gastroenteritis"],
    ),
];

const NEWS_PAGES: &[PageSpec] = &[
    (
        "https://www.fda.gov/safety/recalls-market-withdrawals",
        "Recalls, Market Withdrawals and Safety Alerts | FDA",
        "Company announcements of product recalls and public health alerts.",
        &["food_recall"],
    ),
    (
        "https://www.foodsafetynews.com/outbreaks",
        "Outbreak coverage - Food Safety News",
        "Reporting on multistate outbreaks, investigations and recalls linked to contaminated products.",
        &["news", FOODBORNE_TAG],
    ),
    (
        "https://www.usda.gov/recalls-and-public-health-alerts",
        "Current Recalls and Alerts | USDA",
        "Meat and poultry recalls issued by the food safety and inspection service.",
        &["food_recall"],
    ),
    ("https://www.reuters.com/health", "Health news | Reuters", "Latest health and outbreak headlines.", &["news"]),
    (
        "https://www.lawfirm-example.com/food-injury",
        "Food injury lawyers",
        "Free case review for families affected by contaminated food.",
        &["legal"],
    ),
];

const PET_PAGES: &[PageSpec] = &[
    (
        "https://www.akc.org/expert-advice/health/dog-diarrhea",
        "Dog Diarrhea: Causes and Treatment - AKC",
        "Why dogs get an upset stomach and when to call the vet.",
        &["pet_health"],
    ),
    (
        "https://www.petmd.com/cat/symptoms/vomiting",
        "Why Is My Cat Vomiting? - PetMD",
        "Hairballs, diet changes and infections are common reasons cats throw up.",
        &["pet_health"],
    ),
    (
        "https://www.vca-hospitals.example/puppy-care",
        "Puppy care basics",
        "Vaccines, feeding schedules and stomach troubles in young dogs.",
        &["pet_health"],
    ),
];

const PREVENTION_PAGES: &[PageSpec] = &[
    (
        "https://www.foodsafety.gov/keep-food-safe",
        "Keep Food Safe | FoodSafety.gov",
        "Clean, separate, cook and chill: four steps to prevent illness at home.",
        &["food_safety", FOODBORNE_TAG],
    ),
    (
        "https://www.servsafe.example/food-handler",
        "Food Handler Certification Course",
        "Online training and exam for restaurant workers.",
        &["food_safety"],
    ),
    (
        "https://www.fsis.usda.gov/safe-temperature-chart",
        "Safe Minimum Internal Temperature Chart",
        "Cook meat and poultry to safe internal temperatures.",
        &["food_safety"],
    ),
];

fn page(spec: &PageSpec) -> ResultPage {
    ResultPage {
        url: spec.0.into(),
        title: spec.1.into(),
        snippet: spec.2.into(),
        concept_tags: spec.3.iter().map(|t| (*t).to_string()).collect(),
        clicked: false,
        dwell_s: 0.0,
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, family: PageFamily) -> ResultPage {
    let catalog = match family {
        PageFamily::Foodborne => FOODBORNE_PAGES,
        PageFamily::Digestive => DIGESTIVE_PAGES,
        PageFamily::News => NEWS_PAGES,
        PageFamily::Pets => PET_PAGES,
        PageFamily::Prevention => PREVENTION_PAGES,
        PageFamily::General => &[],
    };
    page(catalog.choose(rng).expect("catalogs are non-empty"))
}

/// Generic result pages echoing a background query.
fn general_pages<R: Rng + ?Sized>(rng: &mut R, text: &str, count: usize) -> Vec<ResultPage> {
    const SITES: [&str; 8] = ["wikipedia", "yelp", "reddit", "youtube", "amazon", "tripadvisor", "espn", "allrecipes"];
    let slug = crate::wsm::tokenize(text).join("-");
    (0..count)
        .map(|_| {
            let site = SITES.choose(rng).copied().unwrap_or("example");
            ResultPage {
                url: format!("https://www.{site}.com/{slug}"),
                title: format!("{text} - {site}"),
                snippet: format!("Find {text} on {site}."),
                concept_tags: BTreeSet::new(),
                clicked: false,
                dwell_s: 0.0,
            }
        })
        .collect()
}

fn dwell<R: Rng + ?Sized>(rng: &mut R, median_s: f64) -> f64 {
    let d = LogNormal::new(median_s.ln(), 0.9).expect("valid log-normal").sample(rng);
    (d * 10.0).round() / 10.0
}

/// Marks result `i` clicked with a sampled dwell time.
fn click<R: Rng + ?Sized>(rng: &mut R, pages: &mut [ResultPage], i: usize, median_s: f64) {
    pages[i].clicked = true;
    pages[i].dwell_s = dwell(rng, median_s);
}

/// Results for a symptom query: two foodborne pages, two digestive-health
/// pages, shuffled. The user clicks a foodborne page with
/// `p_click_foodborne`, otherwise maybe a digestive page.
pub fn symptom_results<R: Rng + ?Sized>(rng: &mut R, p_click_foodborne: f64, dwell_median_s: f64) -> Vec<ResultPage> {
    let mut pages = vec![
        pick(rng, PageFamily::Foodborne),
        pick(rng, PageFamily::Foodborne),
        pick(rng, PageFamily::Digestive),
        pick(rng, PageFamily::Digestive),
    ];
    rand::seq::SliceRandom::shuffle(pages.as_mut_slice(), rng);
    if rng.random_bool(p_click_foodborne) {
        let i = pages.iter().position(|p| p.has_tag(FOODBORNE_TAG)).expect("two foodborne pages");
        click(rng, &mut pages, i, dwell_median_s);
    } else if rng.random_bool(0.5) {
        let i = pages.iter().position(|p| !p.has_tag(FOODBORNE_TAG)).expect("two digestive pages");
        click(rng, &mut pages, i, 40.0);
    }
    pages
}

/// Results for a health-adjacent query: one foodborne page plus pages of the
/// marker's family.
pub fn confuser_results<R: Rng + ?Sized>(
    rng: &mut R,
    text: &str,
    family: PageFamily,
    p_click_foodborne: f64,
    dwell_median_s: f64,
) -> Vec<ResultPage> {
    let mut pages = vec![pick(rng, PageFamily::Foodborne)];
    match family {
        PageFamily::General => pages.extend(general_pages(rng, text, 2)),
        f => {
            pages.push(pick(rng, f));
            pages.push(pick(rng, f));
        }
    }
    pages.push(pick(rng, PageFamily::Prevention));
    rand::seq::SliceRandom::shuffle(pages.as_mut_slice(), rng);
    if rng.random_bool(p_click_foodborne) {
        let i = pages.iter().position(|p| p.has_tag(FOODBORNE_TAG)).expect("a foodborne page");
        click(rng, &mut pages, i, dwell_median_s);
    } else if rng.random_bool(0.6) {
        let others: Vec<usize> = (0..pages.len()).filter(|&i| !pages[i].has_tag(FOODBORNE_TAG)).collect();
        if let Some(&i) = others.choose(rng) {
            click(rng, &mut pages, i, 40.0);
        }
    }
    pages
}

pub fn background_results<R: Rng + ?Sized>(rng: &mut R, text: &str) -> Vec<ResultPage> {
    let mut pages = general_pages(rng, text, 3);
    if rng.random_bool(0.6) {
        let i = rng.random_range(0..pages.len());
        click(rng, &mut pages, i, 40.0);
    }
    pages
}
