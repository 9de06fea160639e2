//! Exact correctability: Knill-Laflamme conditions for subspace codes, the
//! commutant condition for operator algebras, and the standard decoder.

use crate::channels::{
    algebra_projector, commutant, complete_to_tp, encode_then_noise, BlockAlgebra, Isometry,
    KrausChannel, TpMode,
};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_eig, identity, trace, zeros, ComplexMatrix, C64};

/// Frobenius residual at or below which a condition counts as satisfied.
pub const CORRECTABLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub encoding: Isometry,
    pub label: String,
}

impl CodeSpec {
    pub fn new(encoding: Isometry, label: impl Into<String>) -> Self {
        Self {
            encoding,
            label: label.into(),
        }
    }

    /// The whole space as a code.
    pub fn trivial(d: usize) -> Self {
        Self::new(Isometry::encoding(identity(d)).expect("identity is an isometry"), "trivial")
    }

    pub fn logical_dim(&self) -> usize {
        self.encoding.dim_in()
    }

    pub fn physical_dim(&self) -> usize {
        self.encoding.matrix().nrows()
    }

    /// P = VV†.
    pub fn projector(&self) -> ComplexMatrix {
        let v = self.encoding.matrix();
        v * v.adjoint()
    }

    fn check_noise(&self, noise: &KrausChannel) -> Result<()> {
        if noise.dim_in() != self.physical_dim() {
            return Err(Error::DimensionMismatch(format!(
                "code '{}' is {}-dimensional physically, noise takes {}",
                self.label,
                self.physical_dim(),
                noise.dim_in()
            )));
        }
        Ok(())
    }

    /// V†E_i†E_jV for every pair, row-major in (i, j).
    fn logical_products(&self, noise: &KrausChannel) -> Vec<ComplexMatrix> {
        let v = self.encoding.matrix();
        let ev: Vec<ComplexMatrix> = noise.kraus().iter().map(|e| e * v).collect();
        ev.iter()
            .flat_map(|a| ev.iter().map(move |b| a.adjoint() * b))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct KlCheck {
    pub correctable: bool,
    /// λ_ij = Tr(PE_i†E_jP)/Tr P.
    pub lambda: ComplexMatrix,
    /// max_ij ‖PE_i†E_jP − λ_ij P‖_F.
    pub residual: f64,
}

/// Tests PE_i†E_jP = λ_ij P. Since V is an isometry the residual is computed
/// on the logical space as ‖V†E_i†E_jV − λ_ij 1‖_F.
pub fn knill_laflamme_check(code: &CodeSpec, noise: &KrausChannel) -> Result<KlCheck> {
    code.check_noise(noise)?;
    let k = code.logical_dim();
    let n = noise.n_kraus();
    let id = identity(k);
    let products = code.logical_products(noise);
    let mut lambda = zeros(n, n);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = &products[i * n + j];
            let l = trace(m) / C64::new(k as f64, 0.0);
            lambda[(i, j)] = l;
            residual = residual.max(frobenius(&(m - &id * l)));
        }
    }
    Ok(KlCheck {
        correctable: residual <= CORRECTABLE_TOL,
        lambda,
        residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AlgebraCheck {
    pub correctable: bool,
    /// max_ij ‖(id − P_{A'})(V†E_i†E_jV)‖_F.
    pub residual: f64,
}

/// Tests V†E_i†E_jV ∈ A' for all i, j, with A' the commutant of `alg`.
pub fn algebra_correctable_check(
    alg: &BlockAlgebra,
    code: &CodeSpec,
    noise: &KrausChannel,
) -> Result<AlgebraCheck> {
    code.check_noise(noise)?;
    if alg.dim() != code.logical_dim() {
        return Err(Error::DimensionMismatch(format!(
            "algebra acts on {} dimensions, code has {} logical",
            alg.dim(),
            code.logical_dim()
        )));
    }
    let project = algebra_projector(&commutant(alg));
    let mut residual: f64 = 0.0;
    for m in code.logical_products(noise) {
        residual = residual.max(frobenius(&(&m - project.apply(&m)?)));
    }
    Ok(AlgebraCheck {
        correctable: residual <= CORRECTABLE_TOL,
        residual,
    })
}

/// Decoder for a code satisfying the Knill-Laflamme conditions: rotate the
/// errors so λ is diagonal, map each error subspace back with the adjoint of
/// its isometry, and send everything else to the maximally mixed state.
pub fn exact_recovery_from_kl(code: &CodeSpec, noise: &KrausChannel) -> Result<KrausChannel> {
    let kl = knill_laflamme_check(code, noise)?;
    if !kl.correctable {
        return Err(Error::NotCorrectable {
            residual: kl.residual,
        });
    }
    let e = hermitian_eig(&kl.lambda)?;
    let v = code.encoding.matrix();
    let phys = code.physical_dim();
    let k = code.logical_dim();
    let top = e.max_abs();
    let mut kraus = Vec::new();
    for (l, d) in e.eigenvalues.iter().enumerate() {
        if *d <= 1e-12 * top {
            continue;
        }
        let f = noise
            .kraus()
            .iter()
            .enumerate()
            .fold(zeros(phys, phys), |acc, (i, ei)| acc + ei * e.eigenvectors[(i, l)]);
        kraus.push((f * v).adjoint().unscale(d.sqrt()));
    }
    // The error subspaces are orthogonal only up to the residual; square up.
    let s = kraus
        .iter()
        .fold(zeros(phys, phys), |acc, r| acc + r.adjoint() * r);
    let polish = hermitian_eig(&s)?.map(|x| if x > 0.5 { 1.0 / x.sqrt() } else { 0.0 });
    let kraus = kraus.into_iter().map(|r| r * &polish).collect();
    let partial = KrausChannel::new(phys, k, kraus, TpMode::TraceNonincreasing)?;
    complete_to_tp(&partial, &identity(k).unscale(k as f64))
}

/// The noise seen by the logical space.
pub fn encoded_noise(code: &CodeSpec, noise: &KrausChannel) -> Result<KrausChannel> {
    encode_then_noise(&code.encoding, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::standard::*;
    use crate::channels::{choi_distance, complementary, compose};
    use crate::fidelity::worst_case_fidelity;
    use crate::linalg::tensor;

    fn repetition() -> CodeSpec {
        CodeSpec::new(repetition_code(), "repetition")
    }

    #[test]
    fn repetition_code_is_correctable() {
        let noise = single_bit_flips(3, 0.1);
        let kl = knill_laflamme_check(&repetition(), &noise).unwrap();
        assert!(kl.correctable && kl.residual < 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(kl.lambda[(i, j)].norm() < 1e-12);
                }
            }
        }
        assert!((trace(&kl.lambda).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_error_breaks_bit_code() {
        let mut v = zeros(4, 2);
        v[(0, 0)] = C64::new(1.0, 0.0);
        v[(3, 1)] = C64::new(1.0, 0.0);
        let code = CodeSpec::new(Isometry::encoding(v).unwrap(), "bell pair");
        let z1 = tensor(&pauli_z(), &identity(2));
        let noise = KrausChannel::new(
            4,
            4,
            vec![identity(4).scale(0.9f64.sqrt()), z1.scale(0.1f64.sqrt())],
            TpMode::TracePreserving,
        )
        .unwrap();
        let kl = knill_laflamme_check(&code, &noise).unwrap();
        assert!(!kl.correctable && kl.residual > 1e-3);
    }

    #[test]
    fn identity_noise_is_correctable() {
        let kl = knill_laflamme_check(&repetition(), &identity_channel(8)).unwrap();
        assert!(kl.correctable);
        assert!((kl.lambda[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_algebra_matches_kl() {
        let code = repetition();
        for noise in [single_bit_flips(3, 0.1), tensor_noise_z()] {
            let kl = knill_laflamme_check(&code, &noise).unwrap();
            let alg = algebra_correctable_check(&BlockAlgebra::full(2), &code, &noise).unwrap();
            assert_eq!(kl.correctable, alg.correctable);
        }
    }

    fn tensor_noise_z() -> KrausChannel {
        let z = tensor(&tensor(&pauli_z(), &identity(2)), &identity(2));
        KrausChannel::new(
            8,
            8,
            vec![identity(8).scale(0.8f64.sqrt()), z.scale(0.2f64.sqrt())],
            TpMode::TracePreserving,
        )
        .unwrap()
    }

    #[test]
    fn trivial_algebra_always_correctable() {
        let check =
            algebra_correctable_check(&BlockAlgebra::trivial(2), &repetition(), &tensor_noise_z())
                .unwrap();
        assert!(check.correctable);
    }

    #[test]
    fn gauge_noise_on_subsystem_code() {
        let alg = BlockAlgebra::standard(vec![(2, 2)]).unwrap();
        let noise = crate::channels::tensor_channels(&identity_channel(2), &depolarizing(0.7));
        let check = algebra_correctable_check(&alg, &CodeSpec::trivial(4), &noise).unwrap();
        assert!(check.correctable, "{}", check.residual);
        let kl = knill_laflamme_check(&CodeSpec::trivial(4), &noise).unwrap();
        assert!(!kl.correctable);
    }

    #[test]
    fn decoder_restores_repetition_code() {
        let code = repetition();
        let noise = single_bit_flips(3, 0.1);
        let r = exact_recovery_from_kl(&code, &noise).unwrap();
        assert!(r.is_trace_preserving());
        let enc = encoded_noise(&code, &noise).unwrap();
        let f = worst_case_fidelity(&compose(&r, &enc).unwrap(), &identity_channel(2)).unwrap();
        assert!(f.value > 1.0 - 1e-8);
    }

    #[test]
    fn complement_of_correctable_noise_is_constant() {
        let code = repetition();
        for (noise, correctable) in [(single_bit_flips(3, 0.1), true), (tensor_noise_z(), false)] {
            let nc = complementary(&encoded_noise(&code, &noise).unwrap()).unwrap();
            let out = nc.apply(&identity(2).scale(0.5)).unwrap();
            let constant = constant_channel(&out, 2).unwrap();
            let gap = choi_distance(&nc, &constant);
            assert_eq!(gap < 1e-7, correctable);
            assert_eq!(knill_laflamme_check(&code, &noise).unwrap().correctable, correctable);
        }
    }
}
