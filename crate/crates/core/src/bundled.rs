//! Example documents shipped with the library.

pub const ALL: [(&str, &str); 6] = [
    ("basilica-automaton", include_str!("../data/basilica-automaton.json")),
    ("grigorchuk-automaton", include_str!("../data/grigorchuk-automaton.json")),
    ("odometer-automaton", include_str!("../data/odometer-automaton.json")),
    ("sierpinski-ifs", include_str!("../data/sierpinski-ifs.json")),
    ("sierpinski-right-ifs", include_str!("../data/sierpinski-right-ifs.json")),
    ("basilica-ers", include_str!("../data/basilica-ers.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ALL.iter().map(|(n, _)| *n)
}
