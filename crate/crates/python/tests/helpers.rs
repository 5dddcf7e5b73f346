use absphere::{exception_name, parse_sign, parse_variant};
use engine::curvature::SquareVariant;
use engine::{Error, Sign};

#[test]
fn signs_and_variants_parse() {
    assert_eq!(parse_sign("+"), Some(Sign::Plus));
    assert_eq!(parse_sign("minus"), Some(Sign::Minus));
    assert_eq!(parse_sign("p"), None);
    assert_eq!(parse_variant("zero_minus"), Some(SquareVariant::ZeroMinus));
    assert_eq!(
        parse_variant("square-plus"),
        Some(SquareVariant::SquarePlus)
    );
    assert_eq!(parse_variant("square"), None);
}

#[test]
fn errors_split_into_two_exceptions() {
    assert_eq!(exception_name(&Error::EmptyDomain), "ValidationError");
    assert_eq!(
        exception_name(&Error::NonConvergence("x".into())),
        "NumericalError"
    );
}
