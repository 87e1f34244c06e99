use crate::scalar::Scalar;
use crate::torus::RealField;

/// `[[W^2]] = W^2 - c`.
pub fn wick_square<F: Scalar>(w: &RealField<F>, c: F) -> RealField<F> {
    w.map(|x| x * x - c)
}

/// `[[W^3]] = W^3 - 3 c W`.
pub fn wick_cube<F: Scalar>(w: &RealField<F>, c: F) -> RealField<F> {
    let three = F::c(3.0);
    w.map(|x| x * x * x - three * c * x)
}

/// `[[W^4]] = W^4 - 6 c W^2 + 3 c^2`.
pub fn wick_fourth<F: Scalar>(w: &RealField<F>, c: F) -> RealField<F> {
    let six = F::c(6.0);
    let three = F::c(3.0);
    w.map(|x| {
        let x2 = x * x;
        x2 * x2 - six * c * x2 + three * c * c
    })
}
