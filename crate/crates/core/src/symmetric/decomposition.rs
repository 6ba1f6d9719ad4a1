use nalgebra::DVector;

use super::SymmetricPairData;
use crate::error::{LabError, Result};
use crate::lie::{orth_complement, Subspace};
use crate::linalg::null_space;

/// `g = l + RX0 + m'` with `m' = p1 + p2`, adapted to `X0`.
#[derive(Clone, Debug)]
pub struct MprimeDecomposition {
    /// `l = k ∩ ker ad_X0`.
    pub l_sub: Subspace,
    /// `p1 = p ∩ (RX0)^⊥`.
    pub p1: Subspace,
    /// `p2 = ad_X0(p1)`, contained in `k`.
    pub p2: Subspace,
    pub mprime: Subspace,
}

impl MprimeDecomposition {
    pub fn dims(&self) -> [usize; 4] {
        [self.l_sub.dim(), self.p1.dim(), self.p2.dim(), self.mprime.dim()]
    }
}

pub fn mprime_decomposition(pair: &SymmetricPairData) -> Result<MprimeDecomposition> {
    let alg = &pair.algebra;
    let x0 = &pair.x0;
    if alg.norm(x0) < 1e-12 {
        return Err(LabError::degenerate("mprime_decomposition", "X0 vanishes"));
    }
    let ad = alg.ad(x0);

    let k_basis = pair.k_sub.basis();
    let kernel = null_space(&(&ad * k_basis), 1e-10);
    let l_sub = if kernel.ncols() == 0 { Subspace::zero(alg.dim()) } else { Subspace::new(alg, k_basis * kernel)? };

    let line = Subspace::from_vectors(alg, std::slice::from_ref(x0))?;
    let p1 = orth_complement(alg, &line, Some(&pair.p_sub))?;
    let p2 = p1.image(alg, &ad)?;
    if p2.dim() != p1.dim() {
        return Err(LabError::degenerate(
            "mprime_decomposition",
            format!("ad_X0 has rank {} on p1 of dimension {}", p2.dim(), p1.dim()),
        ));
    }
    let mprime = p1.sum(alg, &p2)?;
    let expected = alg.dim() - l_sub.dim() - 1;
    if mprime.dim() != expected {
        return Err(LabError::degenerate(
            "mprime_decomposition",
            format!("dim m' = {} but dim g - dim l - 1 = {expected}", mprime.dim()),
        ));
    }
    Ok(MprimeDecomposition { l_sub, p1, p2, mprime })
}

#[derive(Clone, Debug)]
pub struct Lemma33Report {
    pub dims: [usize; 4],
    /// Distance between `m'` and `(l + RX0)^⊥`.
    pub complement_residual: f64,
    /// Distance between `ad_X0(p2)` and `p1`.
    pub image_residual: f64,
    /// `max |B(l, p2)|`.
    pub l_p2_pairing: f64,
    /// Residual of `p2 ⊆ k`.
    pub p2_in_k: f64,
}

impl Lemma33Report {
    pub fn worst(&self) -> f64 {
        self.complement_residual.max(self.image_residual).max(self.l_p2_pairing).max(self.p2_in_k)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() < tol
    }
}

pub fn verify_lemma33(pair: &SymmetricPairData) -> Result<Lemma33Report> {
    let alg = &pair.algebra;
    let dec = mprime_decomposition(pair)?;
    let line = Subspace::from_vectors(alg, std::slice::from_ref(&pair.x0))?;
    let l_plus_line = dec.l_sub.sum(alg, &line)?;
    let complement = orth_complement(alg, &l_plus_line, None)?;
    let image = dec.p2.image(alg, &alg.ad(&pair.x0))?;
    let pk = pair.proj_k();
    let p2_in_k = (0..dec.p2.dim())
        .map(|i| {
            let v: DVector<f64> = dec.p2.vector(i);
            alg.norm(&(&v - &pk * &v))
        })
        .fold(0.0_f64, f64::max);
    Ok(Lemma33Report {
        dims: dec.dims(),
        complement_residual: dec.mprime.distance(alg, &complement),
        image_residual: image.distance(alg, &dec.p1),
        l_p2_pairing: dec.l_sub.killing_pairing(alg, &dec.p2),
        p2_in_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetric::{build_pair, PairName};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_dimensions() {
        let s2 = build_pair(PairName::Sphere(2)).unwrap();
        assert_eq!(mprime_decomposition(&s2).unwrap().dims(), [0, 1, 1, 2]);
        let s3 = build_pair(PairName::Sphere(3)).unwrap();
        assert_eq!(mprime_decomposition(&s3).unwrap().dims(), [1, 2, 2, 4]);
        let s4 = build_pair(PairName::Sphere(4)).unwrap();
        assert_eq!(mprime_decomposition(&s4).unwrap().dims(), [3, 3, 3, 6]);
        let cp1 = build_pair(PairName::ComplexProjective(1)).unwrap();
        assert_eq!(mprime_decomposition(&cp1).unwrap().dims(), [0, 1, 1, 2]);
    }

    #[test]
    fn holds_for_base_x0() {
        for name in [PairName::Sphere(2), PairName::Sphere(3), PairName::Sphere(4), PairName::ComplexProjective(1)] {
            let report = verify_lemma33(&build_pair(name).unwrap()).unwrap();
            assert!(report.passes(1e-10), "{name}: {report:?}");
        }
    }

    #[test]
    fn scaling_x0_changes_nothing() {
        let pair = build_pair(PairName::Sphere(3)).unwrap();
        let scaled = pair.with_x0(&pair.x0 * 3.7);
        let report = verify_lemma33(&scaled).unwrap();
        assert!(report.passes(1e-10));
        let a = mprime_decomposition(&pair).unwrap();
        let b = mprime_decomposition(&scaled).unwrap();
        assert!(a.mprime.distance(&pair.algebra, &b.mprime) < 1e-10);
    }

    #[test]
    fn random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pair = build_pair(PairName::Sphere(4)).unwrap();
        for _ in 0..10 {
            let x = pair.random_unit_p(&mut rng);
            assert!(verify_lemma33(&pair.with_x0(x)).unwrap().passes(1e-10));
        }
    }

    #[test]
    fn zero_x0_is_rejected() {
        let pair = build_pair(PairName::Sphere(2)).unwrap();
        let zero = DVector::zeros(pair.algebra.dim());
        assert!(mprime_decomposition(&pair.with_x0(zero)).is_err());
    }
}
