//! Periodized Daubechies wavelet packet decomposition.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

/// Decomposition low-pass filters for db1..db10.
const DAUBECHIES: [&[f64]; 10] = [
    &[FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    &[
        -0.12940952255126037,
        0.2241438680420134,
        0.8365163037378079,
        0.48296291314453416,
    ],
    &[
        0.03522629188570953,
        -0.08544127388202666,
        -0.13501102001025458,
        0.45987750211849154,
        0.8068915093110925,
        0.33267055295008263,
    ],
    &[
        -0.010597401785069032,
        0.0328830116668852,
        0.030841381835560764,
        -0.18703481171909309,
        -0.027983769416859854,
        0.6308807679298589,
        0.7148465705529157,
        0.2303778133088965,
    ],
    &[
        0.0033357252854737712,
        -0.012580751999081999,
        -0.006241490212798274,
        0.07757149384004572,
        -0.032244869584638375,
        -0.24229488706638203,
        0.13842814590132074,
        0.7243085284377729,
        0.6038292697971896,
        0.16010239797419293,
    ],
    &[
        -0.0010773010853084796,
        0.004777257510945511,
        0.0005538422011614961,
        -0.03158203931748603,
        0.027522865530305727,
        0.09750160558732304,
        -0.12976686756726194,
        -0.22626469396543983,
        0.31525035170919763,
        0.7511339080210954,
        0.49462389039845306,
        0.11154074335010947,
    ],
    &[
        0.00035371379997452024,
        -0.0018016407040474908,
        0.0004295779729213665,
        0.01255099855609984,
        -0.01657454163066688,
        -0.03802993693501441,
        0.08061260915108308,
        0.07130921926683026,
        -0.22403618499387498,
        -0.14390600392856498,
        0.4697822874051931,
        0.7291320908462351,
        0.3965393194819173,
        0.07785205408500918,
    ],
    &[
        -0.00011747678412476953,
        0.0006754494064505693,
        -0.00039174037337694705,
        -0.004870352993451574,
        0.008746094047405777,
        0.013981027917398282,
        -0.044088253930794755,
        -0.017369301001807547,
        0.12874742662047847,
        0.0004724845739132828,
        -0.2840155429615469,
        -0.015829105256349306,
        0.5853546836542067,
        0.6756307362972898,
        0.31287159091429995,
        0.05441584224310401,
    ],
    &[
        3.93473203162716e-05,
        -0.0002519631889427101,
        0.00023038576352319597,
        0.0018476468830562265,
        -0.00428150368246343,
        -0.004723204757751397,
        0.022361662123679096,
        0.00025094711483145197,
        -0.06763282906132997,
        0.03072568147933338,
        0.14854074933810638,
        -0.09684078322297646,
        -0.2932737832791749,
        0.13319738582500756,
        0.6572880780513005,
        0.6048231236901112,
        0.24383467461259034,
        0.038077947363878345,
    ],
    &[
        -1.3264202894521244e-05,
        9.358867032006959e-05,
        -0.00011646685512928545,
        -0.0006858566949597116,
        0.001992405295185056,
        0.001395351747052901,
        -0.010733175483330575,
        0.0036065535669561697,
        0.033212674059341,
        -0.029457536821875813,
        -0.07139414716639708,
        0.09305736460357235,
        0.12736934033579325,
        -0.19594627437737705,
        -0.24984642432731538,
        0.2811723436605775,
        0.6884590394536035,
        0.5272011889317256,
        0.1881768000776915,
        0.026670057900555554,
    ],
];

/// Wavelet family, depth and boundary handling for the packet tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletSpec {
    /// Daubechies order (number of vanishing moments), 1..=10.
    pub order: usize,
    pub levels: usize,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self {
            order: 4,
            levels: 6,
        }
    }
}

impl WaveletSpec {
    pub fn new(order: usize, levels: usize) -> Result<Self> {
        if !(1..=DAUBECHIES.len()).contains(&order) {
            return Err(Error::invalid(format!(
                "Daubechies order {order} not supported (1..={})",
                DAUBECHIES.len()
            )));
        }
        if levels > 20 {
            return Err(Error::invalid(format!("{levels} levels is too deep")));
        }
        Ok(Self { order, levels })
    }

    pub fn name(&self) -> String {
        format!("db{}", self.order)
    }

    /// Number of leaves, `2^L`.
    pub fn n_leaves(&self) -> usize {
        1 << self.levels
    }

    pub fn low_pass(&self) -> &'static [f64] {
        DAUBECHIES[self.order - 1]
    }

    pub fn high_pass(&self) -> Vec<f64> {
        let lo = self.low_pass();
        let n = lo.len();
        (0..n)
            .map(|k| {
                if k % 2 == 0 {
                    lo[n - 1 - k]
                } else {
                    -lo[n - 1 - k]
                }
            })
            .collect()
    }

    /// Checks that a signal of `n` samples can be decomposed to this depth.
    pub fn check_length(&self, n: usize) -> Result<()> {
        if n < self.n_leaves() {
            return Err(Error::invalid(format!(
                "{} levels need at least {} samples, got {n}",
                self.levels,
                self.n_leaves()
            )));
        }
        Ok(())
    }
}

/// One analysis step. Odd inputs are zero-padded by one sample so the step
/// stays an isometry; both outputs have `⌈n/2⌉` coefficients.
pub fn dwt_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() + x.len() % 2;
    let half = n / 2;
    let at = |i: usize| x.get(i % n).copied().unwrap_or(0.0);
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for j in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (l, h)) in lo.iter().zip(hi).enumerate() {
            let v = at(2 * j + k);
            a += l * v;
            d += h * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// Leaves of the full packet tree, low branch first at every split.
pub fn wpd_leaves(x: &[f64], spec: &WaveletSpec) -> Result<Vec<Vec<f64>>> {
    spec.check_length(x.len())?;
    let lo = spec.low_pass();
    let hi = spec.high_pass();
    let mut nodes = vec![x.to_vec()];
    for _ in 0..spec.levels {
        nodes = nodes
            .iter()
            .flat_map(|node| {
                let (a, d) = dwt_step(node, lo, &hi);
                [a, d]
            })
            .collect();
    }
    Ok(nodes)
}

/// l2 norm of every leaf of the packet tree.
pub fn wpd_norms(x: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    Ok(wpd_leaves(x, spec)?
        .iter()
        .map(|leaf| leaf.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect())
}
