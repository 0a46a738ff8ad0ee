//! Number formatting shared by every CSV writer.

/// `x` rounded to 9 significant digits, printed in the shortest form that
/// reads back to the rounded value.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    // avoid "-0"
    if rounded == 0.0 {
        return "0".into();
    }
    rounded.to_string()
}

/// Shortest representation that round-trips exactly.
pub fn exact(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        x.to_string()
    }
}
