use loopq::funcrel::Relations;
use loopq::qop::{generalized_q, q_operator, Chain};
use num_complex::Complex64;

#[test]
fn unit_relation_through_public_api() -> loopq::Result<()> {
    let chain = Chain::standard(2, 2, 0.7)?;
    let rel = Relations::new(&chain)?;
    let report = rel.check_unit(Complex64::new(0.2, 0.0), 1e-8)?;
    assert!(report.pass, "{report:?}");
    Ok(())
}

#[test]
fn trivial_tuples_give_identity_and_single_q() -> loopq::Result<()> {
    let chain = Chain::standard(1, 3, 0.7)?;
    let zeta = Complex64::new(0.25, 0.05);
    let empty = generalized_q(&[], zeta, &chain)?;
    let id = nalgebra::DMatrix::<Complex64>::identity(chain.dim(), chain.dim());
    assert!((&empty.matrix - id).norm() < 1e-12);
    let single = generalized_q(&[2], zeta, &chain)?;
    let direct = q_operator(2, zeta, &chain)?;
    assert!((&single.matrix - &direct.matrix).norm() < 1e-10 * direct.matrix.norm());
    Ok(())
}
