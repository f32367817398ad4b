//! Stern-Gerlach measurements on spin-1/2 packets with a definite spin
//! direction, and maximum-likelihood recovery of that direction from
//! up/down abundance ratios.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{chunks, Philox4x32};

const SG_STREAM: &str = "stern_gerlach";
/// Coarse search resolution of the likelihood scan.
pub const COARSE_STEP_DEG: f64 = 5.0;
/// 95% quantile of chi-square with two degrees of freedom, `-2 ln 0.05`.
const CHI2_2DOF_95: f64 = 5.991_464_547_107_979;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: Vec3) -> Vec3 {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn polar_to_vec(theta: f64, phi: f64) -> Vec3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn vec_to_polar(v: Vec3) -> (f64, f64) {
    let v = normalize(v);
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let mut phi = v[1].atan2(v[0]);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU || theta == 0.0 || theta == PI {
        phi = 0.0;
    }
    (theta, phi)
}

fn check_polar(theta: f64, phi: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) || !(0.0..TAU).contains(&phi) {
        return Err(Error::InvalidParameter(format!(
            "angles out of range: theta {theta}, phi {phi}"
        )));
    }
    Ok(())
}

/// Angle between two unit vectors, robust near 0 and pi.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Spin direction of a packet, a point on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDirection {
    theta: f64,
    phi: f64,
}

impl SpinDirection {
    /// `theta` in [0, pi], `phi` in [0, 2 pi).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_polar(theta, phi)?;
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta: f64, phi: f64) -> Result<Self> {
        Self::new(theta.to_radians(), phi.to_radians())
    }

    pub fn from_vector(v: Vec3) -> Result<Self> {
        if !(dot(v, v) > 0.0) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("zero or non-finite direction".into()));
        }
        let (theta, phi) = vec_to_polar(v);
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_vector(&self) -> Vec3 {
        polar_to_vec(self.theta, self.phi)
    }

    pub fn antipode(&self) -> Self {
        let v = self.to_vector();
        let (theta, phi) = vec_to_polar([-v[0], -v[1], -v[2]]);
        Self { theta, phi }
    }
}

/// Spin-reference axis of the apparatus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusAxis {
    theta: f64,
    phi: f64,
}

impl ApparatusAxis {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_polar(theta, phi)?;
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta: f64, phi: f64) -> Result<Self> {
        Self::new(theta.to_radians(), phi.to_radians())
    }

    pub fn x() -> Self {
        Self {
            theta: PI / 2.0,
            phi: 0.0,
        }
    }

    pub fn y() -> Self {
        Self {
            theta: PI / 2.0,
            phi: PI / 2.0,
        }
    }

    pub fn z() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_vector(&self) -> Vec3 {
        polar_to_vec(self.theta, self.phi)
    }
}

/// Up/down deflection counts along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgCounts {
    pub axis: ApparatusAxis,
    pub n_up: u64,
    pub n_down: u64,
}

impl SgCounts {
    pub const CSV_HEADER: &'static str = "axis_theta,axis_phi,n_up,n_down";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.axis.theta, self.axis.phi, self.n_up, self.n_down)
    }

    pub fn total(&self) -> u64 {
        self.n_up + self.n_down
    }
}

/// `cos^2(alpha / 2)` from the cosine of the angle between spin and axis.
///
/// Written so that `p(c) + p(-c) == 1` holds exactly in floating point.
fn up_probability_from_cos(c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    if c >= 0.0 {
        (1.0 + c) / 2.0
    } else {
        1.0 - (1.0 - c) / 2.0
    }
}

/// Probability of an up deflection, `cos^2(alpha / 2)`.
pub fn up_probability(spin: &SpinDirection, axis: &ApparatusAxis) -> f64 {
    up_probability_from_cos(dot(spin.to_vector(), axis.to_vector()))
}

/// Per-particle record: the deflection and the eigenpacket direction the
/// particle was forced into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgOutcome {
    pub up: bool,
    pub post_state: SpinDirection,
}

/// Counts from `n` particles through one apparatus. Draws are split into
/// fixed chunks with derived streams, so counts do not depend on threading.
pub fn simulate_sg(spin: &SpinDirection, axis: &ApparatusAxis, n: u64, rng_seed: u64) -> SgCounts {
    let p = up_probability(spin, axis);
    let n_up: u64 = chunks(n as usize)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = Philox4x32::derived(rng_seed, SG_STREAM, chunk);
            (0..len).filter(|_| rng.bernoulli(p)).count() as u64
        })
        .sum();
    SgCounts {
        axis: *axis,
        n_up,
        n_down: n - n_up,
    }
}

/// Same draws as [`simulate_sg`], one record per particle.
pub fn simulate_sg_traced(
    spin: &SpinDirection,
    axis: &ApparatusAxis,
    n: u64,
    rng_seed: u64,
) -> (SgCounts, Vec<SgOutcome>) {
    let p = up_probability(spin, axis);
    let up_state = SpinDirection {
        theta: axis.theta,
        phi: axis.phi,
    };
    let down_state = up_state.antipode();
    let mut outcomes = Vec::with_capacity(n as usize);
    for (chunk, len) in chunks(n as usize) {
        let mut rng = Philox4x32::derived(rng_seed, SG_STREAM, chunk);
        outcomes.extend((0..len).map(|_| {
            let up = rng.bernoulli(p);
            SgOutcome {
                up,
                post_state: if up { up_state } else { down_state },
            }
        }));
    }
    let n_up = outcomes.iter().filter(|o| o.up).count() as u64;
    (
        SgCounts {
            axis: *axis,
            n_up,
            n_down: n - n_up,
        },
        outcomes,
    )
}

/// Maximum-likelihood spin direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    pub direction: SpinDirection,
    /// Half-angle of a cone around the estimate containing the asymptotic
    /// 95% confidence ellipse.
    pub cone_halfangle_95: f64,
    pub log_likelihood: f64,
}

/// Binomial log-likelihood over (axis, n_up, n_down).
struct Likelihood {
    data: Vec<(Vec3, f64, f64)>,
}

impl Likelihood {
    fn new(counts: &[SgCounts]) -> Self {
        Self {
            data: counts
                .iter()
                .map(|c| (c.axis.to_vector(), c.n_up as f64, c.n_down as f64))
                .collect(),
        }
    }

    fn value(&self, s: Vec3) -> f64 {
        self.data
            .iter()
            .map(|&(a, up, down)| {
                let p = up_probability_from_cos(dot(a, s));
                let mut ll = 0.0;
                if up > 0.0 {
                    ll += up * p.ln();
                }
                if down > 0.0 {
                    ll += down * (1.0 - p).ln();
                }
                ll
            })
            .sum()
    }

    /// Euclidean gradient and Hessian in s (before projecting on the sphere).
    fn derivatives(&self, s: Vec3) -> (Vec3, [[f64; 3]; 3]) {
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for &(a, up, down) in &self.data {
            let c = dot(a, s);
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            if up > 0.0 {
                d1 += up / (1.0 + c);
                d2 -= up / (1.0 + c).powi(2);
            }
            if down > 0.0 {
                d1 -= down / (1.0 - c);
                d2 -= down / (1.0 - c).powi(2);
            }
            for i in 0..3 {
                g[i] += d1 * a[i];
                for j in 0..3 {
                    h[i][j] += d2 * a[i] * a[j];
                }
            }
        }
        (g, h)
    }

    /// Tangent-plane basis, Riemannian gradient and Hessian at `s`.
    fn tangent(&self, s: Vec3) -> ([Vec3; 2], [f64; 2], [[f64; 2]; 2]) {
        let helper = if s[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = normalize(cross(helper, s));
        let e2 = cross(s, e1);
        let (g, h) = self.derivatives(s);
        let radial = dot(s, g);
        let basis = [e1, e2];
        let grad = [dot(e1, g), dot(e2, g)];
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let hv = [dot(h[0], basis[j]), dot(h[1], basis[j]), dot(h[2], basis[j])];
                hess[i][j] = dot(basis[i], hv) - if i == j { radial } else { 0.0 };
            }
        }
        (basis, grad, hess)
    }

    /// Newton ascent on the sphere with backtracking; gradient steps where
    /// the Hessian is not negative definite.
    fn refine(&self, start: Vec3) -> (Vec3, f64) {
        let mut s = start;
        let mut ll = self.value(s);
        let scale: f64 = self.data.iter().map(|d| d.1 + d.2).sum::<f64>().max(1.0);
        for _ in 0..200 {
            let (basis, g, h) = self.tangent(s);
            let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gnorm <= 1e-12 * scale {
                break;
            }
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let mut dir = if h[0][0] < 0.0 && det > 0.0 {
                [
                    -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                    -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
                ]
            } else {
                [g[0] / scale, g[1] / scale]
            };
            // keep steps on the scale of the coarse grid
            let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            let max_step = COARSE_STEP_DEG.to_radians();
            if len > max_step {
                dir = [dir[0] * max_step / len, dir[1] * max_step / len];
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = normalize([
                    s[0] + t * (dir[0] * basis[0][0] + dir[1] * basis[1][0]),
                    s[1] + t * (dir[0] * basis[0][1] + dir[1] * basis[1][1]),
                    s[2] + t * (dir[0] * basis[0][2] + dir[1] * basis[1][2]),
                ]);
                let v = self.value(cand);
                if v > ll {
                    s = cand;
                    ll = v;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (s, ll)
    }
}

/// Smallest eigenvalue-like measure of how well the axes span 3-space:
/// `det(sum a a^T) / (trace / 3)^3`, zero for coplanar axes.
fn axis_spread(counts: &[SgCounts]) -> f64 {
    let mut m = [[0.0; 3]; 3];
    for c in counts.iter().filter(|c| c.total() > 0) {
        let a = c.axis.to_vector();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += a[i] * a[j];
            }
        }
    }
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let tr = m[0][0] + m[1][1] + m[2][2];
    if tr == 0.0 {
        return 0.0;
    }
    det / (tr / 3.0).powi(3)
}

/// Coarse-grid local maxima `(ll, theta_index, phi_index)`, best first;
/// ties go to the smallest theta, then the smallest phi.
fn coarse_maxima(lik: &Likelihood) -> Vec<(f64, usize, usize)> {
    let n_theta = (180.0 / COARSE_STEP_DEG).round() as usize;
    let n_phi = (360.0 / COARSE_STEP_DEG).round() as usize;
    let step = COARSE_STEP_DEG.to_radians();
    let mut grid = vec![vec![f64::NEG_INFINITY; n_phi]; n_theta + 1];
    for (it, row) in grid.iter_mut().enumerate() {
        let theta = it as f64 * step;
        if it == 0 || it == n_theta {
            let v = lik.value(polar_to_vec(theta, 0.0));
            row.iter_mut().for_each(|x| *x = v);
        } else {
            for (ip, x) in row.iter_mut().enumerate() {
                *x = lik.value(polar_to_vec(theta, ip as f64 * step));
            }
        }
    }
    let mut maxima = Vec::new();
    for it in 0..=n_theta {
        let phis: &[usize] = if it == 0 || it == n_theta { &[0] } else { &[] };
        let range: Vec<usize> = if phis.is_empty() {
            (0..n_phi).collect()
        } else {
            phis.to_vec()
        };
        for ip in range {
            let v = grid[it][ip];
            if !v.is_finite() {
                continue;
            }
            let mut is_max = true;
            for dt in [-1i64, 0, 1] {
                let jt = it as i64 + dt;
                if jt < 0 || jt > n_theta as i64 {
                    continue;
                }
                let jt = jt as usize;
                let neighbours: Vec<usize> = if jt == 0 || jt == n_theta || it == 0 || it == n_theta {
                    (0..n_phi).collect()
                } else {
                    vec![(ip + n_phi - 1) % n_phi, ip, (ip + 1) % n_phi]
                };
                for jp in neighbours {
                    if (jt, jp) != (it, ip) && grid[jt][jp] > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                maxima.push((v, it, ip));
            }
        }
    }
    maxima.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    maxima
}

/// Maximum-likelihood direction from counts along several axes.
///
/// The binomial likelihood `prod p_i^up_i (1 - p_i)^down_i` with
/// `p_i = cos^2(alpha_i / 2)` is scanned on a 5 degree grid, every local
/// maximum is refined by Newton ascent on the sphere, and the best one is
/// returned. Axes that do not span 3-space, or two distinct refined maxima
/// of equal likelihood, are reported as [`Error::DegenerateAxes`].
pub fn estimate_direction(counts: &[SgCounts]) -> Result<DirectionEstimate> {
    if counts.iter().filter(|c| c.total() > 0).count() < 3 || axis_spread(counts) < 1e-9 {
        return Err(Error::DegenerateAxes(
            "axes do not span 3-space; the likelihood is symmetric under reflection".into(),
        ));
    }
    let lik = Likelihood::new(counts);
    let step = COARSE_STEP_DEG.to_radians();
    let candidates = coarse_maxima(&lik);
    let mut refined: Vec<(Vec3, f64)> = candidates
        .iter()
        .take(8)
        .map(|&(_, it, ip)| lik.refine(polar_to_vec(it as f64 * step, ip as f64 * step)))
        .collect();
    // stable: equal likelihoods keep the grid tie-break order
    refined.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let (best, best_ll) = refined[0];
    let tol = 1e-9 * best_ll.abs().max(1.0);
    if refined[1..]
        .iter()
        .any(|(s, ll)| (best_ll - ll).abs() <= tol && angle_between(*s, best) > 1e-3)
    {
        return Err(Error::DegenerateAxes(
            "two distinct directions maximize the likelihood".into(),
        ));
    }

    let (_, _, hess) = lik.tangent(best);
    // observed information = -Hessian; covariance = its inverse
    let info = [[-hess[0][0], -hess[0][1]], [-hess[1][0], -hess[1][1]]];
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    let cone = if info[0][0] > 0.0 && det > 0.0 {
        let cov = [
            [info[1][1] / det, -info[0][1] / det],
            [-info[1][0] / det, info[0][0] / det],
        ];
        let mean = (cov[0][0] + cov[1][1]) / 2.0;
        let diff = ((cov[0][0] - cov[1][1]) / 2.0).hypot(cov[0][1]);
        (CHI2_2DOF_95 * (mean + diff)).sqrt().min(PI)
    } else {
        PI
    };
    Ok(DirectionEstimate {
        direction: SpinDirection::from_vector(best)?,
        cone_halfangle_95: cone,
        log_likelihood: best_ll,
    })
}
