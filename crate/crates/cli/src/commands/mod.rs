pub mod align;
pub mod analyze;
pub mod decode;
pub mod features;
pub mod map;
pub mod run;
pub mod score;
pub mod synth;
pub mod train;

/// Print the resolved settings a command runs with, one `key = value`
/// line, so every run is reproducible from its log.
pub fn print_resolved(settings: &[(&str, String)]) {
    println!("# resolved configuration");
    for (key, value) in settings {
        println!("{key} = {value}");
    }
}
