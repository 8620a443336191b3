//! Human-readable descriptions of each experiment and its emitted quantities.

use crate::config::ExperimentKind;
use crate::RunError;

struct Entry {
    summary: &'static str,
    quantities: &'static [(&'static str, &'static str)],
    csv: &'static [(&'static str, &'static str)],
}

fn entry(kind: ExperimentKind) -> Entry {
    match kind {
        ExperimentKind::Simulate => Entry {
            summary: "Forward cocycle run phi(t, tau, w, u0) from the first initial datum over [tau, tau + horizon].",
            quantities: &[
                (
                    "results.final",
                    "norms of phi(horizon, tau, w, u0); cocycle of Eq. (3.10)",
                ),
                ("checks.finite_states", "every stored state is finite"),
            ],
            csv: &[
                (
                    "simulate_norms.csv",
                    "t, l2, h1, lp, then tail_l2_<k>, tail_h1_<k> per radius k (tail norms of Lemma 4.4)",
                ),
                (
                    "simulate_state.csv",
                    "x (and y in 2D) coordinates followed by the final state value u",
                ),
            ],
        },
        ExperimentKind::Pullback => Entry {
            summary: "Pullback state u(tau; tau - horizon, theta_{-tau} w, u0) of the first initial datum.",
            quantities: &[("results.state", "norms of the pullback state of Eq. (3.11)")],
            csv: &[("pullback_state.csv", "grid coordinates followed by the state value u")],
        },
        ExperimentKind::Equilibrium => Entry {
            summary: "Pullback limit along an increasing schedule of horizons; the limit is the unique \
                      tempered equilibrium u*(tau, w) of Lemma 6.3 (H1 regularity by Remark 6.5).",
            quantities: &[
                (
                    "results.history",
                    "successive L2 increments between schedule entries, absolute and relative",
                ),
                (
                    "results.l2_norm, h1_norm, lp_norm",
                    "norms of u*(tau, w), Lemma 6.3 and Remark 6.5",
                ),
                ("checks.converged", "last relative increment at most the tolerance"),
                (
                    "checks.history_tail_decreasing",
                    "the last increments decrease strictly",
                ),
                ("checks.norms_finite", "H1 and Lp norms of u* are finite"),
            ],
            csv: &[
                ("equilibrium_history.csv", "t, increment, relative"),
                ("equilibrium_state.csv", "grid coordinates followed by u*"),
            ],
        },
        ExperimentKind::DecayRate => Entry {
            summary: "Exponential rate at which two solutions with the same noise approach each other; \
                      Lemma 6.2 bounds it by -(lambda - alpha3).",
            quantities: &[
                (
                    "results.slope",
                    "least-squares slope of log ||u_a - u_b|| over the window",
                ),
                ("results.bound", "-(lambda - alpha3), Lemma 6.2"),
                ("checks.decay_rate", "slope at most bound + tolerance"),
            ],
            csv: &[],
        },
        ExperimentKind::Tail => Entry {
            summary: "L2 and H1 norms of the pullback state outside the ball of radius k, Lemma 4.4.",
            quantities: &[
                (
                    "results.rows",
                    "tail norms and their fractions of the full norms per radius",
                ),
                ("checks.tail_non_increasing", "tail norms do not increase with k"),
                (
                    "checks.tail_fraction_l2, tail_fraction_h1",
                    "fractions at the check radius",
                ),
            ],
            csv: &[("tail.csv", "k, l2_tail, h1_tail, l2_fraction, h1_fraction")],
        },
        ExperimentKind::Truncation => Entry {
            summary: "Window integral of the superlevel part (v - M)_+ weighted by rho, for a ladder of \
                      thresholds M, Lemma 4.5.",
            quantities: &[
                (
                    "results.rows",
                    "threshold M, rho = alpha1 E^{2-p} e^{-(p-2)|w(-tau)|} M^{p-2}, value",
                ),
                (
                    "checks.strictly_decreasing",
                    "values decrease strictly along the ladder",
                ),
                ("checks.final_value", "value at the largest threshold"),
            ],
            csv: &[("truncation.csv", "threshold, rho, value")],
        },
        ExperimentKind::UpperSemi => Entry {
            summary: "Hausdorff semidistance from the epsilon attractor sample to the noise-free sample \
                      for a decreasing ladder of epsilon, Theorem 5.2.",
            quantities: &[
                (
                    "results.rows",
                    "semidistances per (epsilon, seed) in L2 and H1 (Definition 2.2)",
                ),
                ("results.means", "mean semidistance per epsilon"),
                (
                    "checks.l2_contract, h1_contract",
                    "at most one inversion and last/first mean ratio <= 0.2",
                ),
            ],
            csv: &[("upper_semi.csv", "epsilon, seed, dist_l2, dist_h1")],
        },
        ExperimentKind::CocycleTest => Entry {
            summary: "Identity and composition axioms of the cocycle, Definition 2.1.",
            quantities: &[
                (
                    "results.residual",
                    "relative L2 residual of phi(t+s, tau, w) = phi(t, tau+s, theta_s w) o phi(s, tau, w)",
                ),
                ("checks.identity_bitwise", "phi(0, tau, w, u0) equals u0 bit for bit"),
                ("checks.composition_residual", "residual at most the tolerance"),
            ],
            csv: &[],
        },
        ExperimentKind::CheckHypotheses => Entry {
            summary: "Sampled check of the growth conditions (3.1)-(3.4) and the derivative bound (5.1) \
                      on the configured nonlinearity.",
            quantities: &[
                (
                    "results.checks",
                    "worst slack per hypothesis and the sample attaining it",
                ),
                ("checks.hypothesis_<name>", "one check per hypothesis"),
            ],
            csv: &[],
        },
        ExperimentKind::Absorbing => Entry {
            summary: "Absorbing radius integral of Lemma 4.1 and Eq. (4.58), and the fitted constant \
                      pairing it with the observed pullback norm.",
            quantities: &[
                ("results.quadrature", "integral I at horizons H and 2H"),
                (
                    "results.witnesses",
                    "observed L2 norm, I, and fitted constant ||u|| / sqrt(I) at P and 2P",
                ),
                ("checks.quadrature_stability", "relative change of I between H and 2H"),
                (
                    "checks.fitted_constant_stability",
                    "relative change of the fitted constant between P and 2P",
                ),
                ("checks.absorption_bound", "observed norm within the fitted bound"),
            ],
            csv: &[],
        },
    }
}

/// Description of `name`, citing the governing result for every emitted quantity, and the
/// columns of every CSV file.
pub fn describe(name: &str) -> Result<String, RunError> {
    let kind = ExperimentKind::from_name(name).ok_or_else(|| {
        let known: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        RunError::Config(format!(
            "unknown experiment `{name}`; expected one of {}",
            known.join(", ")
        ))
    })?;
    let e = entry(kind);
    let mut out = format!("{}\n\n{}\n\nQuantities:\n", kind.name(), e.summary);
    for (q, d) in e.quantities {
        out.push_str(&format!("  {q}: {d}\n"));
    }
    if !e.csv.is_empty() {
        out.push_str("\nCSV files (header row, shortest round-trip decimals):\n");
        for (f, cols) in e.csv {
            out.push_str(&format!("  {f}: {cols}\n"));
        }
    }
    Ok(out)
}
