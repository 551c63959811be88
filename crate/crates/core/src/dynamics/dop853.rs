//! Dormand-Prince 8(5,3) embedded pair with 7th-order dense output
//! (Hairer, Norsett and Wanner, Solving ODEs I, code DOP853).
//!
//! The error norm is the maximum over components rather than the RMS, so
//! every component of the local error estimate respects its tolerance.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::timeframes::Epoch;

pub(crate) const N: usize = 6;
pub(crate) type State = [f64; N];

const C: [f64; 16] = [
    0.0,
    0.526001519587677318785587544488e-1,
    0.789002279381515978178381316732e-1,
    0.118350341907227396726757197510,
    0.281649658092772603273242802490,
    0.333333333333333333333333333333,
    0.25,
    0.307692307692307692307692307692,
    0.651282051282051282051282051282,
    0.6,
    0.857142857142857142857142857142,
    1.0,
    1.0,
    0.1,
    0.2,
    0.777777777777777777777777777778,
];

const A2: [f64; 1] = [5.26001519587677318785587544488e-2];
const A3: [f64; 2] = [1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2];
const A4: [f64; 3] = [2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2];
const A5: [f64; 4] = [
    2.41365134159266685502369798665e-1,
    0.0,
    -8.84549479328286085344864962717e-1,
    9.24834003261792003115737966543e-1,
];
const A6: [f64; 5] = [
    3.7037037037037037037037037037e-2,
    0.0,
    0.0,
    1.70828608729473871279604482173e-1,
    1.25467687566822425016691814123e-1,
];
const A7: [f64; 6] = [
    3.7109375e-2,
    0.0,
    0.0,
    1.70252211019544039314978060272e-1,
    6.02165389804559606850219397283e-2,
    -1.7578125e-2,
];
const A8: [f64; 7] = [
    3.70920001185047927108779319836e-2,
    0.0,
    0.0,
    1.70383925712239993810214054705e-1,
    1.07262030446373284651809199168e-1,
    -1.53194377486244017527936158236e-2,
    8.27378916381402288758473766002e-3,
];
const A9: [f64; 8] = [
    6.24110958716075717114429577812e-1,
    0.0,
    0.0,
    -3.36089262944694129406857109825,
    -8.68219346841726006818189891453e-1,
    2.75920996994467083049415600797e1,
    2.01540675504778934086186788979e1,
    -4.34898841810699588477366255144e1,
];
const A10: [f64; 9] = [
    4.77662536438264365890433908527e-1,
    0.0,
    0.0,
    -2.48811461997166764192642586468,
    -5.90290826836842996371446475743e-1,
    2.12300514481811942347288949897e1,
    1.52792336328824235832596922938e1,
    -3.32882109689848629194453265587e1,
    -2.03312017085086261358222928593e-2,
];
const A11: [f64; 10] = [
    -9.3714243008598732571704021658e-1,
    0.0,
    0.0,
    5.18637242884406370830023853209,
    1.09143734899672957818500254654,
    -8.14978701074692612513997267357,
    -1.85200656599969598641566180701e1,
    2.27394870993505042818970056734e1,
    2.49360555267965238987089396762,
    -3.0467644718982195003823669022,
];
const A12: [f64; 11] = [
    2.27331014751653820792359768449,
    0.0,
    0.0,
    -1.05344954667372501984066689879e1,
    -2.00087205822486249909675718444,
    -1.79589318631187989172765950534e1,
    2.79488845294199600508499808837e1,
    -2.85899827713502369474065508674,
    -8.87285693353062954433549289258,
    1.23605671757943030647266201528e1,
    6.43392746015763530355970484046e-1,
];
const A14: [f64; 13] = [
    5.61675022830479523392909219681e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    2.53500210216624811088794765333e-1,
    -2.46239037470802489917441475441e-1,
    -1.24191423263816360469010140626e-1,
    1.5329179827876569731206322685e-1,
    8.20105229563468988491666602057e-3,
    7.56789766054569976138603589584e-3,
    -8.298e-3,
];
const A15: [f64; 14] = [
    3.18346481635021405060768473261e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    2.83009096723667755288322961402e-2,
    5.35419883074385676223797384372e-2,
    -5.49237485713909884646569340306e-2,
    0.0,
    0.0,
    -1.08347328697249322858509316994e-4,
    3.82571090835658412954920192323e-4,
    -3.40465008687404560802977114492e-4,
    1.41312443674632500278074618366e-1,
];
const A16: [f64; 15] = [
    -4.28896301583791923408573538692e-1,
    0.0,
    0.0,
    0.0,
    0.0,
    -4.69762141536116384314449447206,
    7.68342119606259904184240953878,
    4.06898981839711007970213554331,
    3.56727187455281109270669543021e-1,
    0.0,
    0.0,
    0.0,
    -1.39902416515901462129418009734e-3,
    2.9475147891527723389556272149,
    -9.15095847217987001081870187138,
];

const B: [f64; 12] = [
    5.42937341165687622380535766363e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566,
    1.89151789931450038304281599044,
    -5.8012039600105847814672114227,
    3.1116436695781989440891606237e-1,
    -1.52160949662516078556178806805e-1,
    2.01365400804030348374776537501e-1,
    4.47106157277725905176885569043e-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512,
    0.733846688281611857341361741547,
    0.220588235294117647058823529412e-1,
];

const ER: [f64; 12] = [
    0.1312004499419488073250102996e-1,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753e1,
    -0.4957589496572501915214079952,
    0.1664377182454986536961530415e1,
    -0.3503288487499736816886487290,
    0.3341791187130174790297318841,
    0.8192320648511571246570742613e-1,
    -0.2235530786388629525884427845e-1,
];

const D: [[f64; 16]; 4] = [
    [
        -0.84289382761090128651353491142e1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.56671495351937776962531783590,
        -0.30689499459498916912797304727e1,
        0.23846676565120698287728149680e1,
        0.21170345824450282767155149946e1,
        -0.87139158377797299206789907490,
        0.22404374302607882758541771650e1,
        0.63157877876946881815570249290,
        -0.88990336451333310820698117400e-1,
        0.18148505520854727256656404962e2,
        -0.91946323924783554000451984436e1,
        -0.44360363875948939664310572000e1,
    ],
    [
        0.10427508642579134603413151009e2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.24228349177525818288430175319e3,
        0.16520045171727028198505394887e3,
        -0.37454675472269020279518312152e3,
        -0.22113666853125306036270938578e2,
        0.77334326684722638389603898808e1,
        -0.30674084731089398182061213626e2,
        -0.93321305264302278729567221706e1,
        0.15697238121770843886131091075e2,
        -0.31139403219565177677282850411e2,
        -0.93529243588444783865713862664e1,
        0.35816841486394083752465898540e2,
    ],
    [
        0.19985053242002433820987653617e2,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.38703730874935176555105901742e3,
        -0.18917813819516756882830838328e3,
        0.52780815920542364900561016686e3,
        -0.11573902539959630126141871134e2,
        0.68812326946963000169666922661e1,
        -0.10006050966910838403183860980e1,
        0.77771377980534432092869265740,
        -0.27782057523535084065932004339e1,
        -0.60196695231264120758267380846e2,
        0.84320405506677161018159903784e2,
        0.11992291136182789328035130030e2,
    ],
    [
        -0.25693933462703749003312586129e2,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.15418974869023643374053993627e3,
        -0.23152937917604549567536039109e3,
        0.35763911791061412378285349910e3,
        0.93405324183624310003907691704e2,
        -0.37458323136451633156875139351e2,
        0.10409964950896230045147246184e3,
        0.29840293426660503123344363579e2,
        -0.43533456590011143754432175058e2,
        0.96324553959188282948394950600e2,
        -0.39177261675615439165231486172e2,
        -0.14972683625798562581422125276e3,
    ],
];

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const BETA: f64 = 0.04;

/// One accepted step with its dense-output polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep {
    /// Step start, seconds from the propagation origin.
    pub x0: f64,
    /// Signed step length (s).
    pub h: f64,
    rcont: [State; 8],
    stop: Option<f64>,
}

impl DenseStep {
    /// Step end, or the truncation point if the step was cut short.
    pub fn x1(&self) -> f64 {
        self.stop.unwrap_or(self.x0 + self.h)
    }

    pub(crate) fn truncate(&mut self, x: f64) {
        self.stop = Some(x);
    }

    pub fn start(&self) -> State {
        self.rcont[0]
    }

    pub fn end(&self) -> State {
        match self.stop {
            Some(x) => self.eval(x),
            None => std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i]),
        }
    }

    /// Interpolated state at `x` (seconds from origin), 7th order.
    pub fn eval(&self, x: f64) -> State {
        let s = (x - self.x0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            let conpar = r[4][i] + s * (r[5][i] + s1 * (r[6][i] + s * r[7][i]));
            r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * conpar)))
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 {
            (self.x0, self.x1())
        } else {
            (self.x1(), self.x0)
        };
        (lo..=hi).contains(&x)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Controls {
    pub rtol: f64,
    pub atol: State,
    pub h_max: f64,
    pub h_min: f64,
    pub h_init: Option<f64>,
}

fn axpy(y: &State, h: f64, coeffs: &[f64], k: &[State]) -> State {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, kj) in coeffs.iter().zip(k) {
            if *c != 0.0 {
                acc += c * kj[i];
            }
        }
        y[i] + h * acc
    })
}

fn initial_step<F>(f: &mut F, x: f64, y: &State, f0: &State, dir: f64, ctl: &Controls) -> Result<f64>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let sk: State = std::array::from_fn(|i| ctl.atol[i] + ctl.rtol * y[i].abs());
    let dnf: f64 = (0..N).map(|i| (f0[i] / sk[i]).powi(2)).sum();
    let dny: f64 = (0..N).map(|i| (y[i] / sk[i]).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(ctl.h_max) * dir;
    let y1: State = std::array::from_fn(|i| y[i] + h * f0[i]);
    let f1 = f(x + h, &y1)?;
    let der2 = ((0..N).map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2)).sum::<f64>()).sqrt() / h.abs();
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    Ok((100.0 * h.abs()).min(h1).min(ctl.h_max) * dir)
}

/// Integrates from `x0` to `xend` (seconds from `origin`).
///
/// `step_cap` bounds |h| as a function of the current state; `on_step`
/// sees each accepted step and may stop the integration early.
pub(crate) fn integrate<F, L, S>(
    mut f: F,
    origin: Epoch,
    x0: f64,
    y0: State,
    xend: f64,
    ctl: &Controls,
    mut step_cap: L,
    mut on_step: S,
) -> Result<()>
where
    F: FnMut(f64, &State) -> Result<State>,
    L: FnMut(f64, &State) -> f64,
    S: FnMut(&DenseStep) -> Result<ControlFlow<()>>,
{
    if xend == x0 {
        return Ok(());
    }
    let dir = (xend - x0).signum();
    let mut x = x0;
    let mut y = y0;
    let mut k: [State; 16] = [[0.0; N]; 16];
    k[0] = f(x, &y)?;
    let mut h = match ctl.h_init {
        Some(h0) => h0.abs() * dir,
        None => initial_step(&mut f, x, &y, &k[0], dir, ctl)?,
    };
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let expo1 = 1.0 / 8.0 - BETA * 0.2;
    loop {
        let cap = step_cap(x, &y).min(ctl.h_max);
        if h.abs() > cap {
            h = cap * dir;
        }
        let mut last = false;
        if (x + 1.01 * h - xend) * dir >= 0.0 {
            h = xend - x;
            last = true;
        }
        if h.abs() < ctl.h_min && !last {
            return Err(Error::StepUnderflow {
                epoch: origin.add_seconds(x),
                step_s: h.abs(),
            });
        }

        k[1] = f(x + C[1] * h, &axpy(&y, h, &A2, &k[..1]))?;
        k[2] = f(x + C[2] * h, &axpy(&y, h, &A3, &k[..2]))?;
        k[3] = f(x + C[3] * h, &axpy(&y, h, &A4, &k[..3]))?;
        k[4] = f(x + C[4] * h, &axpy(&y, h, &A5, &k[..4]))?;
        k[5] = f(x + C[5] * h, &axpy(&y, h, &A6, &k[..5]))?;
        k[6] = f(x + C[6] * h, &axpy(&y, h, &A7, &k[..6]))?;
        k[7] = f(x + C[7] * h, &axpy(&y, h, &A8, &k[..7]))?;
        k[8] = f(x + C[8] * h, &axpy(&y, h, &A9, &k[..8]))?;
        k[9] = f(x + C[9] * h, &axpy(&y, h, &A10, &k[..9]))?;
        k[10] = f(x + C[10] * h, &axpy(&y, h, &A11, &k[..10]))?;
        k[11] = f(x + C[11] * h, &axpy(&y, h, &A12, &k[..11]))?;

        let incr: State = std::array::from_fn(|i| (0..12).map(|j| B[j] * k[j][i]).sum());
        let ynew: State = std::array::from_fn(|i| y[i] + h * incr[i]);

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..N {
            let sk = ctl.atol[i] + ctl.rtol * y[i].abs().max(ynew[i].abs());
            let e2 = incr[i] - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
            let e1: f64 = (0..12).map(|j| ER[j] * k[j][i]).sum();
            err2 = f64::max(err2, (e2 / sk).powi(2));
            err = f64::max(err, (e1 / sk).powi(2));
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / deno).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo1);
        let fac = fac11 / facold.powf(BETA);
        let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac / SAFE));
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            k[12] = f(x + h, &ynew)?;

            let ydiff: State = std::array::from_fn(|i| ynew[i] - y[i]);
            let bspl: State = std::array::from_fn(|i| h * k[0][i] - ydiff[i]);
            let mut rcont = [[0.0; N]; 8];
            rcont[0] = y;
            rcont[1] = ydiff;
            rcont[2] = bspl;
            rcont[3] = std::array::from_fn(|i| ydiff[i] - h * k[12][i] - bspl[i]);

            k[13] = f(x + C[13] * h, &axpy(&y, h, &A14, &k[..13]))?;
            k[14] = f(x + C[14] * h, &axpy(&y, h, &A15, &k[..14]))?;
            k[15] = f(x + C[15] * h, &axpy(&y, h, &A16, &k[..15]))?;
            for (row, d) in D.iter().enumerate() {
                rcont[4 + row] = std::array::from_fn(|i| h * (0..16).map(|j| d[j] * k[j][i]).sum::<f64>());
            }

            let step = DenseStep {
                x0: x,
                h,
                rcont,
                stop: None,
            };
            k[0] = k[12];
            x += h;
            y = ynew;

            if hnew.abs() > ctl.h_max {
                hnew = ctl.h_max * dir;
            }
            if last_rejected {
                hnew = dir * hnew.abs().min(h.abs());
            }
            last_rejected = false;

            if let ControlFlow::Break(()) = on_step(&step)? {
                return Ok(());
            }
            if last {
                return Ok(());
            }
            h = hnew;
        } else {
            hnew = h / (1.0 / FAC1).min(fac11 / SAFE);
            last_rejected = true;
            h = hnew;
        }
    }
}
