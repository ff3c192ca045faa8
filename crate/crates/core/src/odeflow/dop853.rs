//! Dormand–Prince 8(5,3) for matrix-valued ODEs dY/dt = f(t, Y).
//!
//! Error control is per entry, `sk = rtol·(max(|y|, |y_new|) + floor·‖y‖_max)`,
//! with Hairer's blended 5th/3rd order estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{max_abs, CMat};

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.333;
const MAX_FACTOR: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dop853 {
    pub rtol: f64,
    /// Absolute floor as a fraction of the current max entry.
    pub floor: f64,
    pub max_steps: usize,
}

impl Default for Dop853 {
    fn default() -> Self {
        Dop853 { rtol: 1e-12, floor: 1e-2, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// Linear combination `y + h·Σ w_k·k_k`, skipping zero weights.
fn lincomb(y: &CMat, h: f64, terms: &[(f64, &CMat)]) -> CMat {
    let mut out = y.clone();
    for &(w, k) in terms {
        out.zip_apply(k, |o, v| *o += v * (w * h));
    }
    out
}

impl Dop853 {
    pub fn with_rtol(rtol: f64) -> Self {
        Dop853 { rtol, ..Dop853::default() }
    }

    fn err_norm(&self, y: &CMat, ynew: &CMat, e5: &CMat, e3: &CMat, h: f64) -> f64 {
        let floor = self.floor * max_abs(y).max(max_abs(ynew));
        let mut s5 = 0.0;
        let mut s3 = 0.0;
        for ((a, b), (x5, x3)) in y.iter().zip(ynew.iter()).zip(e5.iter().zip(e3.iter())) {
            let sk = self.rtol * (a.norm().max(b.norm()) + floor);
            if sk == 0.0 {
                continue;
            }
            s5 += (x5.norm() / sk).powi(2);
            s3 += (x3.norm() / sk).powi(2);
        }
        let mut deno = s5 + 0.01 * s3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        h.abs() * s5 / (deno * y.len() as f64).sqrt()
    }

    fn initial_step(&self, f: &dyn Fn(f64, &CMat) -> CMat, t0: f64, y0: &CMat, f0: &CMat, span: f64) -> f64 {
        let floor = self.floor * max_abs(y0);
        let scaled = |m: &CMat| -> f64 {
            let mut s = 0.0;
            for (v, y) in m.iter().zip(y0.iter()) {
                let sk = self.rtol * (y.norm() + floor);
                if sk > 0.0 {
                    s += (v.norm() / sk).powi(2);
                }
            }
            (s / m.len() as f64).sqrt()
        };
        let d0 = scaled(y0);
        let d1 = scaled(f0);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span.abs());
        let y1 = lincomb(y0, h0 * span.signum(), &[(1.0, f0)]);
        let f1 = f(t0 + h0 * span.signum(), &y1);
        let d2 = scaled(&(&f1 - f0)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (1e-6f64).max(h0 * 1e-3) } else { (0.01 / d1.max(d2)).powf(1.0 / 8.0) };
        (100.0 * h0).min(h1).min(span.abs())
    }

    /// Integrates from `t0` to `t1` and returns `Y(t1)`.
    pub fn integrate(&self, f: &dyn Fn(f64, &CMat) -> CMat, t0: f64, t1: f64, y0: &CMat) -> Result<(CMat, Stats)> {
        let mut stats = Stats::default();
        if t1 == t0 {
            return Ok((y0.clone(), stats));
        }
        let dir = (t1 - t0).signum();
        let mut t = t0;
        let mut y = y0.clone();
        let mut k1 = f(t, &y);
        stats.evals += 1;
        let mut h = self.initial_step(f, t0, &y, &k1, t1 - t0);
        stats.evals += 1;
        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepBudget(self.max_steps));
            }
            let last = (t + dir * h - t1) * dir >= 0.0;
            if last {
                h = (t1 - t).abs();
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow(t));
            }
            let hs = h * dir;
            let k2 = f(t + C2 * hs, &lincomb(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &lincomb(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &lincomb(&y, hs, &[(A41, &k1), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &lincomb(&y, hs, &[(A51, &k1), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + C6 * hs, &lincomb(&y, hs, &[(A61, &k1), (A64, &k4), (A65, &k5)]));
            let k7 = f(t + C7 * hs, &lincomb(&y, hs, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
            let k8 = f(
                t + C8 * hs,
                &lincomb(&y, hs, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
            );
            let k9 = f(
                t + C9 * hs,
                &lincomb(&y, hs, &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
            );
            let k10 = f(
                t + C10 * hs,
                &lincomb(
                    &y,
                    hs,
                    &[(A101, &k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)],
                ),
            );
            let k11 = f(
                t + C11 * hs,
                &lincomb(
                    &y,
                    hs,
                    &[
                        (A111, &k1),
                        (A114, &k4),
                        (A115, &k5),
                        (A116, &k6),
                        (A117, &k7),
                        (A118, &k8),
                        (A119, &k9),
                        (A1110, &k10),
                    ],
                ),
            );
            let k12 = f(
                t + hs,
                &lincomb(
                    &y,
                    hs,
                    &[
                        (A121, &k1),
                        (A124, &k4),
                        (A125, &k5),
                        (A126, &k6),
                        (A127, &k7),
                        (A128, &k8),
                        (A129, &k9),
                        (A1210, &k10),
                        (A1211, &k11),
                    ],
                ),
            );
            stats.evals += 11;
            let step = lincomb(
                &CMat::zeros(y.nrows(), y.ncols()),
                1.0,
                &[(B1, &k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)],
            );
            let ynew = lincomb(&y, hs, &[(1.0, &step)]);
            let e3 = lincomb(&step, 1.0, &[(-BHH1, &k1), (-BHH2, &k9), (-BHH3, &k12)]);
            let e5 = lincomb(
                &CMat::zeros(y.nrows(), y.ncols()),
                1.0,
                &[(ER1, &k1), (ER6, &k6), (ER7, &k7), (ER8, &k8), (ER9, &k9), (ER10, &k10), (ER11, &k11), (ER12, &k12)],
            );
            let err = self.err_norm(&y, &ynew, &e5, &e3, h);
            let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_FACTOR, MAX_FACTOR) };
            if err <= 1.0 && err.is_finite() {
                stats.accepted += 1;
                t = if last { t1 } else { t + hs };
                y = ynew;
                if last {
                    return Ok((y, stats));
                }
                k1 = f(t, &y);
                stats.evals += 1;
                h *= factor;
            } else {
                stats.rejected += 1;
                h *= if err.is_finite() { factor.min(1.0) } else { MIN_FACTOR };
            }
        }
    }
}

/// `dY/dt = c(t)·Y` convenience wrapper.
pub fn integrate_linear(
    solver: &Dop853,
    coeff: &dyn Fn(f64) -> CMat,
    t0: f64,
    t1: f64,
    y0: &CMat,
) -> Result<CMat> {
    let f = |t: f64, y: &CMat| coeff(t) * y;
    solver.integrate(&f, t0, t1, y0).map(|r| r.0)
}
