//! DSL cases shared by the DSL tests and the acceptance run.

use std::f64::consts::{E, PI};

use phlo_core::dsl::Params;
use phlo_core::exterior::Point4;
use phlo_core::field::bump;

pub const PARAMS: Params = Params { eps: Some(-1.0), kappa: Some(1.0), l0: Some(0.25) };

pub fn pt(x: f64, y: f64, z: f64, xi: f64) -> Point4 {
    Point4::new(x, y, z, xi)
}

/// `(source, point, expected value)`.
pub fn golden() -> Vec<(&'static str, Point4, f64)> {
    let o = Point4::ORIGIN;
    let p = pt(0.5, -1.5, 2.0, 0.25);
    vec![
        ("1", o, 1.0),
        ("2.5e-3", o, 2.5e-3),
        ("1E2", o, 100.0),
        (".5", o, 0.5),
        ("x", p, 0.5),
        ("y", p, -1.5),
        ("z", p, 2.0),
        ("xi", p, 0.25),
        ("x*y", pt(2.0, 3.0, 0.0, 0.0), 6.0),
        ("x + y * z", p, 0.5 - 3.0),
        ("(x + y) * z", p, -2.0),
        ("x - y - z", p, 0.0),
        ("x / y / z", p, 0.5 / -1.5 / 2.0),
        ("2^3^2", o, 512.0),
        ("-2^2", o, -4.0),
        ("(-2)^2", o, 4.0),
        ("--x", p, 0.5),
        ("-x*y", p, 0.75),
        ("x^2", pt(3.0, 0.0, 0.0, 0.0), 9.0),
        ("z^0.5", p, 2f64.sqrt()),
        ("z^-1", p, 0.5),
        ("pi", o, PI),
        ("eps", o, -1.0),
        ("kappa", o, 1.0),
        ("l0", o, 0.25),
        ("lambda", o, 1.0),
        ("kappa/l0", o, 4.0),
        ("sin(x)", p, 0.5f64.sin()),
        ("cos(xi)", p, 0.25f64.cos()),
        ("exp(1)", o, E),
        ("sqrt(z)", p, 2f64.sqrt()),
        ("atan2(y, x)", pt(1.0, 1.0, 0.0, 0.0), PI / 4.0),
        ("atan2(0, -1)", o, PI),
        ("bump(0)", o, (-1f64).exp()),
        ("bump(2)", p, 0.0),
        ("bump(-1)", o, 0.0),
        ("bump(0.5)", o, (-1.0 / 0.75f64).exp()),
        ("bump((xi+z)/4)", p, bump(2.25 / 4.0)),
        ("sin(x)*bump((xi+z)/4)", p, 0.5f64.sin() * bump(2.25 / 4.0)),
        ("sin(xi - z)", pt(0.0, 0.0, 1.0, 1.0), 0.0),
        ("exp(-(x^2 + y^2))", p, (-(0.25f64 + 2.25)).exp()),
        ("cos(pi*x)^2 + sin(pi*x)^2", p, 1.0),
        ("sqrt(x^2 + y^2 + z^2)", p, (0.25f64 + 2.25 + 4.0).sqrt()),
        ("  x\t*\n2 ", p, 1.0),
        ("(((x)))", p, 0.5),
        ("-(kappa/l0)*eps*z + 0.3", p, 8.3),
        ("x*(y + (z - xi))", p, 0.5 * (-1.5 + 1.75)),
        ("1/(1 + x^2)", p, 0.8),
        ("atan2(sin(x), cos(x))", p, 0.5),
        ("2*pi/lambda", o, 2.0 * PI),
    ]
}

/// Smooth cases away from bump boundaries.
pub const SMOOTH: [&str; 12] = [
    "x*y*z*xi",
    "sin(x)*cos(y) + exp(z/2)*xi",
    "sqrt(4 + x^2 + y^2)",
    "atan2(y, 3 + x)",
    "exp(-(x^2 + y^2 + z^2))",
    "bump((xi + z)/4)",
    "bump(x/3)*sin(2*y)",
    "(1 + x^2)^-1.5",
    "cos(kappa/l0*xi - z)",
    "x^3 - 2*y^2*z + xi",
    "sin(xi - z)",
    "exp(sin(x*y)) / (2 + cos(z))",
];
