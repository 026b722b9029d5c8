pub mod dsl_cases;
