//! The fixture models shipped with the toolkit.

pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! fixtures {
    ($($name:literal),* $(,)?) => {
        pub const FIXTURES: &[Fixture] = &[
            $(Fixture {
                name: $name,
                text: include_str!(concat!("../../../fixtures/", $name, ".tm")),
            },)*
        ];
    };
}

fixtures!(
    "car",
    "car_bypass",
    "vehicle",
    "polygon_style",
    "degree_course",
    "assembly",
    "car_data",
    "car_loose",
);

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// Parses a shipped fixture; panics if it does not parse.
pub fn load(name: &str) -> crate::parser::ModelDocument {
    let f = fixture(name).unwrap_or_else(|| panic!("no fixture `{name}`"));
    crate::parser::parse(f.text).unwrap_or_else(|e| panic!("fixture `{name}` fails to parse: {e:?}"))
}
