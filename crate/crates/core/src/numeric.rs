//! Tolerant comparisons on extended reals.

/// Relative tolerance for axiom and inequality checks.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor used near zero.
pub const ABS_TOL: f64 = 1e-12;

/// `a <= b` up to `REL_TOL` relative (`ABS_TOL` absolute near zero).
/// Infinite values compare exactly.
#[inline]
pub fn le_tol(a: f64, b: f64) -> bool {
    if a <= b {
        return true;
    }
    if !(a.is_finite() && b.is_finite()) {
        return false;
    }
    a - b <= (REL_TOL * a.abs().max(b.abs())).max(ABS_TOL)
}

#[inline]
pub fn eq_tol(a: f64, b: f64) -> bool {
    le_tol(a, b) && le_tol(b, a)
}

/// `ceil(log2(x))` robust against `log2` landing a hair above an exact power.
pub fn ceil_log2(x: f64) -> u32 {
    let l = x.log2();
    let r = l.round();
    if (l - r).abs() < 1e-12 {
        r.max(0.0) as u32
    } else {
        l.ceil().max(0.0) as u32
    }
}

/// `base^exp + 1`, saturating at `u128::MAX`.
pub fn pow_plus_one(base: u64, exp: u32) -> u128 {
    (base as u128)
        .checked_pow(exp)
        .and_then(|v| v.checked_add(1))
        .unwrap_or(u128::MAX)
}

/// Serde adapter writing `+inf` as the string `"inf"` (JSON has no infinity literal).
pub mod ext_real {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_str("inf")
        } else if value.is_nan() {
            s.serialize_str("nan")
        } else {
            s.serialize_f64(*value)
        }
    }
}

/// `ext_real` for optional values.
pub mod opt_ext_real {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => super::ext_real::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}
