use super::{BiphotonAmplitude, BiphotonError, DelayArm};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Relative magnitude below which samples count as outside the support.
const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Two-time amplitude Φ(t₁,t₂) = e^{−iω_a⁰t₁ − iω_b⁰t₂}·env(t₁,t₂) sampled on
/// t = t0 + n·dt per axis. Outside the lattice the amplitude is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomain {
    pub na: usize,
    pub nb: usize,
    pub dt_a: f64,
    pub dt_b: f64,
    pub t0_a: f64,
    pub t0_b: f64,
    pub carrier_a: f64,
    pub carrier_b: f64,
    env: Vec<Complex64>,
    support: Support,
}

/// Bounding ranges of the region where |Φ| exceeds the support threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub a: (f64, f64),
    pub b: (f64, f64),
    /// Range of t₁ − t₂.
    pub diff: (f64, f64),
    /// Range of t₁ + t₂.
    pub sum: (f64, f64),
}

fn fft_2d(data: &mut [Complex64], na: usize, nb: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fb = planner.plan_fft_forward(nb);
    for row in data.chunks_mut(nb) {
        fb.process(row);
    }
    let fa = planner.plan_fft_forward(na);
    let mut col = vec![Complex64::new(0.0, 0.0); na];
    for j in 0..nb {
        for i in 0..na {
            col[i] = data[i * nb + j];
        }
        fa.process(&mut col);
        for i in 0..na {
            data[i * nb + j] = col[i];
        }
    }
}

impl TimeDomain {
    pub(super) fn from_amplitude(amp: &BiphotonAmplitude, pad: usize) -> Self {
        let g = amp.grid();
        let (na, nb) = (g.a.size * pad, g.b.size * pad);
        let dt_a = 2.0 * PI / (na as f64 * g.a.spacing);
        let dt_b = 2.0 * PI / (nb as f64 * g.b.spacing);
        let (sa, sb) = match amp.delay_arm() {
            DelayArm::A => (amp.delay(), 0.0),
            DelayArm::B => (0.0, amp.delay()),
        };
        let t0_a = -((na / 2) as f64) * dt_a + sa;
        let t0_b = -((nb / 2) as f64) * dt_b + sb;
        let pre_a: Vec<Complex64> = (0..g.a.size)
            .map(|k| Complex64::from_polar(1.0, -g.a.offset(k) * t0_a))
            .collect();
        let pre_b: Vec<Complex64> = (0..g.b.size)
            .map(|k| Complex64::from_polar(1.0, -g.b.offset(k) * t0_b))
            .collect();
        let mut data = vec![Complex64::new(0.0, 0.0); na * nb];
        for ia in 0..g.a.size {
            for ib in 0..g.b.size {
                data[ia * nb + ib] = amp.delayed_value(ia, ib) * pre_a[ia] * pre_b[ib];
            }
        }
        fft_2d(&mut data, na, nb);
        let scale = g.a.spacing * g.b.spacing / (2.0 * PI);
        let (ha, hb) = ((g.a.size / 2) as f64, (g.b.size / 2) as f64);
        let post_a: Vec<Complex64> = (0..na)
            .map(|n| Complex64::from_polar(scale, 2.0 * PI * ha * n as f64 / na as f64))
            .collect();
        let post_b: Vec<Complex64> = (0..nb)
            .map(|n| Complex64::from_polar(1.0, 2.0 * PI * hb * n as f64 / nb as f64))
            .collect();
        for n1 in 0..na {
            for n2 in 0..nb {
                data[n1 * nb + n2] *= post_a[n1] * post_b[n2];
            }
        }
        Self::from_envelope(
            na,
            nb,
            (t0_a, dt_a, g.a.center),
            (t0_b, dt_b, g.b.center),
            data,
        )
    }

    /// Builds a cache from envelope samples; `(t0, dt, carrier)` per axis.
    pub fn from_envelope(
        na: usize,
        nb: usize,
        axis_a: (f64, f64, f64),
        axis_b: (f64, f64, f64),
        env: Vec<Complex64>,
    ) -> Self {
        assert_eq!(env.len(), na * nb);
        let mut td = Self {
            na,
            nb,
            t0_a: axis_a.0,
            dt_a: axis_a.1,
            carrier_a: axis_a.2,
            t0_b: axis_b.0,
            dt_b: axis_b.1,
            carrier_b: axis_b.2,
            env,
            support: Support {
                a: (0.0, 0.0),
                b: (0.0, 0.0),
                diff: (0.0, 0.0),
                sum: (0.0, 0.0),
            },
        };
        td.support = td.compute_support();
        td
    }

    fn compute_support(&self) -> Support {
        let peak = self.env.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let thr = peak * SUPPORT_THRESHOLD;
        let mut s = Support {
            a: (f64::INFINITY, f64::NEG_INFINITY),
            b: (f64::INFINITY, f64::NEG_INFINITY),
            diff: (f64::INFINITY, f64::NEG_INFINITY),
            sum: (f64::INFINITY, f64::NEG_INFINITY),
        };
        let grow = |r: &mut (f64, f64), x: f64| {
            r.0 = r.0.min(x);
            r.1 = r.1.max(x);
        };
        for n1 in 0..self.na {
            let t1 = self.time_a(n1);
            for n2 in 0..self.nb {
                if self.env[n1 * self.nb + n2].norm() > thr {
                    let t2 = self.time_b(n2);
                    grow(&mut s.a, t1);
                    grow(&mut s.b, t2);
                    grow(&mut s.diff, t1 - t2);
                    grow(&mut s.sum, t1 + t2);
                }
            }
        }
        // Pad by the interpolation stencil so off-lattice points near the
        // edge are kept.
        let (pa, pb) = (2.0 * self.dt_a, 2.0 * self.dt_b);
        s.a = (s.a.0 - pa, s.a.1 + pa);
        s.b = (s.b.0 - pb, s.b.1 + pb);
        s.diff = (s.diff.0 - pa - pb, s.diff.1 + pa + pb);
        s.sum = (s.sum.0 - pa - pb, s.sum.1 + pa + pb);
        s
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn time_a(&self, n: usize) -> f64 {
        self.t0_a + n as f64 * self.dt_a
    }

    pub fn time_b(&self, n: usize) -> f64 {
        self.t0_b + n as f64 * self.dt_b
    }

    pub fn envelope(&self) -> &[Complex64] {
        &self.env
    }

    pub fn env_sample(&self, n1: usize, n2: usize) -> Complex64 {
        self.env[n1 * self.nb + n2]
    }

    /// Φ at lattice node (n₁, n₂).
    pub fn sample(&self, n1: usize, n2: usize) -> Complex64 {
        let phase = -(self.carrier_a * self.time_a(n1) + self.carrier_b * self.time_b(n2));
        self.env_sample(n1, n2) * Complex64::from_polar(1.0, phase)
    }

    /// Lattice index of `t` on axis a if it sits on a node.
    pub fn node_a(&self, t: f64) -> Option<i64> {
        node(t, self.t0_a, self.dt_a)
    }

    pub fn node_b(&self, t: f64) -> Option<i64> {
        node(t, self.t0_b, self.dt_b)
    }

    fn env_at_index(&self, n1: i64, n2: i64) -> Complex64 {
        if n1 < 0 || n2 < 0 || n1 >= self.na as i64 || n2 >= self.nb as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.env[n1 as usize * self.nb + n2 as usize]
        }
    }

    /// Envelope at the lattice node (n₁, n₂); zero off the lattice.
    pub fn env_node(&self, n1: i64, n2: i64) -> Complex64 {
        self.env_at_index(n1, n2)
    }

    /// Envelope at arbitrary times: exact on nodes, bicubic in between.
    pub fn envelope_at(&self, t1: f64, t2: f64) -> Complex64 {
        let x = (t1 - self.t0_a) / self.dt_a;
        let y = (t2 - self.t0_b) / self.dt_b;
        let (ix, iy) = (x.round(), y.round());
        let on_x = (x - ix).abs() < 1e-9;
        let on_y = (y - iy).abs() < 1e-9;
        if on_x && on_y {
            return self.env_at_index(ix as i64, iy as i64);
        }
        let span = |v: f64, on: bool, r: f64| -> (i64, [f64; 4], usize) {
            if on {
                (r as i64, [1.0, 0.0, 0.0, 0.0], 1)
            } else {
                let f = v.floor();
                (f as i64 - 1, keys_weights(v - f), 4)
            }
        };
        let (bx, wx, kx) = span(x, on_x, ix);
        let (by, wy, ky) = span(y, on_y, iy);
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, wxp) in wx.iter().enumerate().take(kx) {
            let mut row = Complex64::new(0.0, 0.0);
            for (q, wyq) in wy.iter().enumerate().take(ky) {
                row += self.env_at_index(bx + p as i64, by + q as i64) * *wyq;
            }
            acc += row * *wxp;
        }
        acc
    }

    /// Φ(t₁, t₂) including the carrier.
    pub fn value(&self, t1: f64, t2: f64) -> Complex64 {
        let phase = -(self.carrier_a * t1 + self.carrier_b * t2);
        self.envelope_at(t1, t2) * Complex64::from_polar(1.0, phase)
    }

    /// Φ(t₁, t₂)·e^{iω_f(t₁+t₂)}.
    pub fn value_in_frame(&self, t1: f64, t2: f64, frame: f64) -> Complex64 {
        let phase = -((self.carrier_a - frame) * t1 + (self.carrier_b - frame) * t2);
        self.envelope_at(t1, t2) * Complex64::from_polar(1.0, phase)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.env.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt_a * self.dt_b
    }

    fn moments(&self, f: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for n1 in 0..self.na {
            let t1 = self.time_a(n1);
            for n2 in 0..self.nb {
                let w = self.env[n1 * self.nb + n2].norm_sqr();
                if w > 0.0 {
                    let u = f(t1, self.time_b(n2));
                    m0 += w;
                    m1 += w * u;
                    m2 += w * u * u;
                }
            }
        }
        (m0, m1, m2)
    }

    pub fn difference_width(&self) -> Result<f64, BiphotonError> {
        let (m0, m1, m2) = self.moments(|a, b| a - b);
        if m0 <= 0.0 {
            return Err(BiphotonError::Degenerate);
        }
        let mean = m1 / m0;
        Ok((m2 / m0 - mean * mean).max(0.0).sqrt())
    }

    /// Intensity-weighted mean arrival times (⟨t₁⟩, ⟨t₂⟩).
    pub fn centroid(&self) -> Result<(f64, f64), BiphotonError> {
        let (m0, ma, _) = self.moments(|a, _| a);
        let (_, mb, _) = self.moments(|_, b| b);
        if m0 <= 0.0 {
            return Err(BiphotonError::Degenerate);
        }
        Ok((ma / m0, mb / m0))
    }

    pub(super) fn rebased(&self, old: f64, arm: DelayArm) -> Self {
        let mut out = self.clone();
        out.shift(-old, arm);
        out
    }

    /// Translates the amplitude by `s` along the given arm, exactly.
    pub(super) fn shift(&mut self, s: f64, arm: DelayArm) {
        if s == 0.0 {
            return;
        }
        let carrier = match arm {
            DelayArm::A => {
                self.t0_a += s;
                self.carrier_a
            }
            DelayArm::B => {
                self.t0_b += s;
                self.carrier_b
            }
        };
        let ph = Complex64::from_polar(1.0, carrier * s);
        for z in self.env.iter_mut() {
            *z *= ph;
        }
        self.support = self.compute_support();
    }

    /// |Φ(t₁,t₂)|² as an exportable matrix.
    pub fn intensity(&self) -> super::IntensityMatrix {
        super::IntensityMatrix {
            domain: "time".into(),
            axis_a: super::LatticeAxis {
                start: self.t0_a,
                step: self.dt_a,
                len: self.na,
            },
            axis_b: super::LatticeAxis {
                start: self.t0_b,
                step: self.dt_b,
                len: self.nb,
            },
            values: self.env.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

fn node(t: f64, t0: f64, dt: f64) -> Option<i64> {
    let x = (t - t0) / dt;
    let r = x.round();
    ((x - r).abs() < 1e-9).then_some(r as i64)
}

/// Cubic convolution weights (Keys, a = −1/2) for offsets −1, 0, 1, 2.
fn keys_weights(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    [
        -0.5 * f3 + f2 - 0.5 * f,
        1.5 * f3 - 2.5 * f2 + 1.0,
        -1.5 * f3 + 2.0 * f2 + 0.5 * f,
        0.5 * f3 - 0.5 * f2,
    ]
}
