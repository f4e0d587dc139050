use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::joint::InducedJoint;
use super::tilted::TiltedTable;
use crate::error::{Error, Result};

/// Below this the dispersion is treated as exactly zero.
pub const ZERO_DISPERSION: f64 = 1e-14;
const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VInTerms {
    pub v_in_u_iota: f64,
    pub v_in_s_iota: f64,
    pub v_in_a_iota: f64,
    pub v_in_u_d: f64,
    pub v_in_s_d: f64,
    pub v_in_a_d: f64,
    pub v_in_cov: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VBetTerms {
    pub v_bet_iota: f64,
    pub v_bet_d: f64,
    pub v_bet_cov: f64,
    /// Same as `v_bet_iota` with `iota_{W;H}` in place of `iota_{U;H}`.
    pub v_bet_iota_wh: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub d: f64,
    pub d_center: f64,
    pub lambda_star: f64,
    /// `E[j]`.
    pub r_check: f64,
    /// `I(U;H)` of the joint.
    pub mutual_information: f64,
    pub avg_distortion: f64,
    pub v: f64,
    pub v_in: f64,
    pub v_bet: f64,
    pub v_in_terms: VInTerms,
    pub v_bet_terms: VBetTerms,
    pub third_abs_moment: f64,
    /// `6 A / V^{3/2}`; `None` when the dispersion vanishes.
    pub berry_esseen_b: Option<f64>,
    pub zero_dispersion: bool,
    /// `|V - V_in - V_bet|`.
    pub residual_total: f64,
    /// `|V_in - sum of the seven weighted terms|`.
    pub residual_v_in: f64,
    /// `|V_bet - (iota + lambda^2 d + 2 lambda cov)|`.
    pub residual_v_bet: f64,
    /// `|E j - I(U;H) - lambda* (E d - d_center)|`.
    pub residual_mean: f64,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    p: f64,
    i: f64,
    d: f64,
    ii: f64,
    dd: f64,
    id: f64,
}

impl Acc {
    fn add(&mut self, p: f64, i: f64, d: f64) {
        self.p += p;
        self.i += p * i;
        self.d += p * d;
        self.ii += p * i * i;
        self.dd += p * d * d;
        self.id += p * i * d;
    }
    fn mi(&self) -> f64 {
        self.i / self.p
    }
    fn md(&self) -> f64 {
        self.d / self.p
    }
}

/// Two-pass weighted moments of `(iota, d)` over groups, used for the
/// variance ladder without cancellation from raw second moments.
fn group_means<K: Ord + Copy>(items: &[(K, f64, f64, f64)]) -> BTreeMap<K, Acc> {
    let mut m: BTreeMap<K, Acc> = BTreeMap::new();
    for &(k, p, i, d) in items {
        m.entry(k).or_default().add(p, i, d);
    }
    m
}

/// Weighted variance/covariance of `(x, y)` pairs about their weighted mean.
fn cov(items: &[(f64, f64, f64)]) -> f64 {
    let tot: f64 = items.iter().map(|t| t.0).sum();
    if tot <= 0.0 {
        return 0.0;
    }
    let mx = items.iter().map(|t| t.0 * t.1).sum::<f64>() / tot;
    let my = items.iter().map(|t| t.0 * t.2).sum::<f64>() / tot;
    items.iter().map(|t| t.0 * (t.1 - mx) * (t.2 - my)).sum::<f64>() / tot
}

pub fn dispersion_report(joint: &InducedJoint, tilted: &TiltedTable) -> Result<DispersionReport> {
    let lam = tilted.lambda_star;
    let dc = tilted.d_center;
    // (w, u, t, h, p, iota, d)
    let rows: Vec<(usize, usize, usize, usize, f64, f64, f64)> = joint
        .atoms
        .iter()
        .map(|a| (a.w, a.u, a.t, a.h, a.p, joint.iota_uh(a.u, a.h), joint.distortion[a.w][a.h]))
        .collect();
    for r in &rows {
        if tilted.get(r.0, r.1, r.3).is_none() {
            return Err(Error::Support(format!("tilted table misses atom (w={}, u={}, h={})", r.0, r.1, r.3)));
        }
    }
    let j = |i: f64, d: f64| i + lam * (d - dc);

    // Full-joint moments of j.
    let jv: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.4, j(r.5, r.6), j(r.5, r.6))).collect();
    let v = cov(&jv).max(0.0);
    let mean_j: f64 = rows.iter().map(|r| r.4 * j(r.5, r.6)).sum();
    let mi: f64 = rows.iter().map(|r| r.4 * r.5).sum();
    let ed: f64 = rows.iter().map(|r| r.4 * r.6).sum();
    let third: f64 = rows.iter().map(|r| r.4 * (j(r.5, r.6) - mean_j).abs().powi(3)).sum();

    // Conditional means at each level of the ladder.
    let by_w = group_means(&rows.iter().map(|r| (r.0, r.4, r.5, r.6)).collect::<Vec<_>>());
    let by_wu = group_means(&rows.iter().map(|r| ((r.0, r.1), r.4, r.5, r.6)).collect::<Vec<_>>());
    let by_wut = group_means(&rows.iter().map(|r| ((r.0, r.1, r.2), r.4, r.5, r.6)).collect::<Vec<_>>());

    let mut terms = VInTerms::default();
    let mut v_in_direct = 0.0;
    for (&w, acc_w) in &by_w {
        let pw = acc_w.p;
        let within: Vec<_> = rows.iter().filter(|r| r.0 == w).collect();
        // Var(j | w), Var/Cov of iota and d given w.
        let jj: Vec<(f64, f64, f64)> = within.iter().map(|r| (r.4, j(r.5, r.6), j(r.5, r.6))).collect();
        v_in_direct += pw * cov(&jj).max(0.0);
        let idc: Vec<(f64, f64, f64)> = within.iter().map(|r| (r.4, r.5, r.6)).collect();
        terms.v_in_cov += pw * cov(&idc);

        // Pool level: Var_{U|w}(E[f | w, u]).
        let pools: Vec<(&(usize, usize), &Acc)> = by_wu.iter().filter(|(k, _)| k.0 == w).collect();
        let ui: Vec<(f64, f64, f64)> = pools.iter().map(|(_, a)| (a.p, a.mi(), a.mi())).collect();
        let ud: Vec<(f64, f64, f64)> = pools.iter().map(|(_, a)| (a.p, a.md(), a.md())).collect();
        terms.v_in_u_iota += pw * cov(&ui).max(0.0);
        terms.v_in_u_d += pw * cov(&ud).max(0.0);

        // Selection level: E_{U|w}[Var_{T|u}(E[f | w, u, t])].
        for (&(_, u), acc_u) in &pools {
            let ts: Vec<&Acc> = by_wut.iter().filter(|(k, _)| k.0 == w && k.1 == u).map(|(_, a)| a).collect();
            let ti: Vec<(f64, f64, f64)> = ts.iter().map(|a| (a.p, a.mi(), a.mi())).collect();
            let td: Vec<(f64, f64, f64)> = ts.iter().map(|a| (a.p, a.md(), a.md())).collect();
            terms.v_in_s_iota += acc_u.p * cov(&ti).max(0.0);
            terms.v_in_s_d += acc_u.p * cov(&td).max(0.0);
        }
    }
    // Learner level: E[Var_{H|t}(f)] over (w, u, t).
    for (&(w, u, t), acc) in &by_wut {
        let hs: Vec<_> = rows.iter().filter(|r| r.0 == w && r.1 == u && r.2 == t).collect();
        let hi: Vec<(f64, f64, f64)> = hs.iter().map(|r| (r.4, r.5, r.5)).collect();
        let hd: Vec<(f64, f64, f64)> = hs.iter().map(|r| (r.4, r.6, r.6)).collect();
        terms.v_in_a_iota += acc.p * cov(&hi).max(0.0);
        terms.v_in_a_d += acc.p * cov(&hd).max(0.0);
    }

    // Between sub-distributions.
    let wi: Vec<(f64, f64, f64)> = by_w.values().map(|a| (a.p, a.mi(), a.mi())).collect();
    let wd: Vec<(f64, f64, f64)> = by_w.values().map(|a| (a.p, a.md(), a.md())).collect();
    let wid: Vec<(f64, f64, f64)> = by_w.values().map(|a| (a.p, a.mi(), a.md())).collect();
    let wj: Vec<(f64, f64, f64)> = by_w.values().map(|a| (a.p, j(a.mi(), a.md()), j(a.mi(), a.md()))).collect();
    let iwh: Vec<(f64, f64, f64)> = by_w
        .iter()
        .map(|(&w, a)| {
            let e: f64 = (0..joint.n_h)
                .filter(|&h| joint.p_h_given_w[w][h] > 0.0)
                .map(|h| joint.p_h_given_w[w][h] * joint.iota_wh(w, h))
                .sum();
            (a.p, e, e)
        })
        .collect();
    let bet = VBetTerms {
        v_bet_iota: cov(&wi).max(0.0),
        v_bet_d: cov(&wd).max(0.0),
        v_bet_cov: cov(&wid),
        v_bet_iota_wh: cov(&iwh).max(0.0),
    };
    let v_bet = cov(&wj).max(0.0);

    let v_in_terms = terms.v_in_u_iota
        + terms.v_in_s_iota
        + terms.v_in_a_iota
        + lam * lam * (terms.v_in_u_d + terms.v_in_s_d + terms.v_in_a_d)
        + 2.0 * lam * terms.v_in_cov;
    let v_bet_terms = bet.v_bet_iota + lam * lam * bet.v_bet_d + 2.0 * lam * bet.v_bet_cov;
    let residual_total = (v - v_in_direct - v_bet).abs();
    let residual_v_in = (v_in_direct - v_in_terms).abs();
    let residual_v_bet = (v_bet - v_bet_terms).abs();
    let zero_dispersion = v <= ZERO_DISPERSION;
    if zero_dispersion && residual_v_in.max(residual_v_bet).max(residual_total) > IDENTITY_TOL {
        return Err(Error::Decomposition(format!(
            "zero dispersion but decomposition residuals {residual_total:e} / {residual_v_in:e} / {residual_v_bet:e}"
        )));
    }
    if !third.is_finite() {
        return Err(Error::Decomposition("third absolute moment is not finite".into()));
    }
    Ok(DispersionReport {
        d: tilted.d,
        d_center: dc,
        lambda_star: lam,
        r_check: mean_j,
        mutual_information: mi,
        avg_distortion: ed,
        v,
        v_in: v_in_direct,
        v_bet,
        v_in_terms: terms,
        v_bet_terms: bet,
        third_abs_moment: third,
        berry_esseen_b: (!zero_dispersion).then(|| 6.0 * third / v.powf(1.5)),
        zero_dispersion,
        residual_total,
        residual_v_in,
        residual_v_bet,
        residual_mean: (mean_j - mi - lam * (ed - dc)).abs(),
    })
}

impl DispersionReport {
    const COLUMNS: [&'static str; 28] = [
        "d",
        "d_center",
        "lambda_star",
        "R_check",
        "I_UH",
        "avg_distortion",
        "V",
        "V_in",
        "V_bet",
        "V_in_U_iota",
        "V_in_S_iota",
        "V_in_A_iota",
        "V_in_U_d",
        "V_in_S_d",
        "V_in_A_d",
        "V_in_cov",
        "V_bet_iota",
        "V_bet_d",
        "V_bet_cov",
        "V_bet_iota_WH",
        "third_abs_moment",
        "berry_esseen_B",
        "zero_dispersion",
        "residual_total",
        "residual_V_in",
        "residual_V_bet",
        "residual_mean",
        "flags",
    ];

    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.zero_dispersion {
            f.push("zero-dispersion");
        }
        if (self.v_bet_terms.v_bet_iota - self.v_bet_terms.v_bet_iota_wh).abs() > 1e-12 {
            f.push("v-bet-iota-convention-differs");
        }
        f.join(";")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(Self::COLUMNS)?;
        let t = &self.v_in_terms;
        let b = &self.v_bet_terms;
        let nums = [
            self.d,
            self.d_center,
            self.lambda_star,
            self.r_check,
            self.mutual_information,
            self.avg_distortion,
            self.v,
            self.v_in,
            self.v_bet,
            t.v_in_u_iota,
            t.v_in_s_iota,
            t.v_in_a_iota,
            t.v_in_u_d,
            t.v_in_s_d,
            t.v_in_a_d,
            t.v_in_cov,
            b.v_bet_iota,
            b.v_bet_d,
            b.v_bet_cov,
            b.v_bet_iota_wh,
            self.third_abs_moment,
        ];
        let mut rec: Vec<String> = nums.iter().map(|v| v.to_string()).collect();
        rec.push(self.berry_esseen_b.map_or("undefined".into(), |v| v.to_string()));
        rec.push(self.zero_dispersion.to_string());
        for v in [self.residual_total, self.residual_v_in, self.residual_v_bet, self.residual_mean] {
            rec.push(v.to_string());
        }
        rec.push(self.flags());
        w.write_record(rec)?;
        w.flush().map_err(|e| Error::Export(e.to_string()))?;
        Ok(())
    }
}
