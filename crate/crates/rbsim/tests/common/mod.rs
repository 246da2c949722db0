//! Shared oracles and helpers for the integration tests.
//!
//! The dynamics oracles here are deliberately independent of the library's
//! implementation: they work on 2x2 complex density matrices evolved either
//! by the closed-form SU(2) propagator or by brute-force RK4 integration of
//! the Schrodinger equation, and only convert to Bloch components at the
//! boundary. Library code paths (SO(3) axis-angle maps) share no arithmetic
//! with them beyond the Hamiltonian definition itself.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use rbsim::bloch::BlochState;

pub const TOL_EXACT: f64 = 1e-12;
pub const TOL_ORACLE: f64 = 1e-9;
pub const TOL_COMPOSE: f64 = 1e-10;

/// 2x2 complex matrix as [[row0], [row1]].
pub type Mat2 = [[C; 2]; 2];

pub const IDENTITY2: Mat2 = [
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn mat_scale(a: &Mat2, s: C) -> Mat2 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// Drive Hamiltonian in the rotating frame:
/// H = (omega/2)(cos(phase) sx + sin(phase) sy) - (detuning/2) sz.
pub fn hamiltonian(omega: f64, phase: f64, detuning: f64) -> Mat2 {
    let hx = 0.5 * omega * phase.cos();
    let hy = 0.5 * omega * phase.sin();
    let hz = -0.5 * detuning;
    // H = hx sx + hy sy + hz sz
    [
        [C::new(hz, 0.0), C::new(hx, -hy)],
        [C::new(hx, hy), C::new(-hz, 0.0)],
    ]
}

/// Closed-form propagator U = exp(-i H t) for the constant drive Hamiltonian:
/// U = cos(a/2) I - i sin(a/2) (n . sigma), a = Omega' t,
/// n = (omega cos phase, omega sin phase, -detuning) / Omega'.
pub fn su2_propagator(omega: f64, phase: f64, duration: f64, detuning: f64) -> Mat2 {
    let gen_rabi = (omega * omega + detuning * detuning).sqrt();
    if gen_rabi == 0.0 || duration == 0.0 {
        return IDENTITY2;
    }
    let (nx, ny, nz) = (
        omega * phase.cos() / gen_rabi,
        omega * phase.sin() / gen_rabi,
        -detuning / gen_rabi,
    );
    let half = 0.5 * gen_rabi * duration;
    let (s, c) = (half.sin(), half.cos());
    // n . sigma = [[nz, nx - i ny], [nx + i ny, -nz]]
    [
        [
            C::new(c, -s * nz),
            C::new(-s * ny, -s * nx),
        ],
        [
            C::new(s * ny, -s * nx),
            C::new(c, s * nz),
        ],
    ]
}

/// Brute-force propagator: RK4 integration of dU/dt = -i H U with `steps`
/// fixed steps. Shares no trigonometry with the closed form above.
pub fn rk4_propagator(omega: f64, phase: f64, duration: f64, detuning: f64, steps: usize) -> Mat2 {
    let h = hamiltonian(omega, phase, detuning);
    let rhs = |u: &Mat2| -> Mat2 { mat_scale(&mat_mul(&h, u), C::new(0.0, -1.0)) };
    let dt = duration / steps as f64;
    let mut u = IDENTITY2;
    for _ in 0..steps {
        let k1 = rhs(&u);
        let k2 = rhs(&mat_add(&u, &mat_scale(&k1, C::new(0.5 * dt, 0.0))));
        let k3 = rhs(&mat_add(&u, &mat_scale(&k2, C::new(0.5 * dt, 0.0))));
        let k4 = rhs(&mat_add(&u, &mat_scale(&k3, C::new(dt, 0.0))));
        let mut incr = k1;
        incr = mat_add(&incr, &mat_scale(&k2, C::new(2.0, 0.0)));
        incr = mat_add(&incr, &mat_scale(&k3, C::new(2.0, 0.0)));
        incr = mat_add(&incr, &k4);
        u = mat_add(&u, &mat_scale(&incr, C::new(dt / 6.0, 0.0)));
    }
    u
}

/// rho = (I + b . sigma) / 2.
pub fn rho_from_bloch(b: BlochState) -> Mat2 {
    [
        [
            C::new(0.5 * (1.0 + b.bz), 0.0),
            C::new(0.5 * b.bx, -0.5 * b.by),
        ],
        [
            C::new(0.5 * b.bx, 0.5 * b.by),
            C::new(0.5 * (1.0 - b.bz), 0.0),
        ],
    ]
}

pub fn bloch_from_rho(rho: &Mat2) -> BlochState {
    BlochState::new(
        2.0 * rho[0][1].re,
        -2.0 * rho[0][1].im,
        rho[0][0].re - rho[1][1].re,
    )
}

/// Evolve a Bloch state by conjugating its density matrix: rho -> U rho U+.
pub fn conjugate(u: &Mat2, b: BlochState) -> BlochState {
    let rho = rho_from_bloch(b);
    let out = mat_mul(u, &mat_mul(&rho, &mat_dagger(u)));
    bloch_from_rho(&out)
}

/// Master-equation oracle: RK4 integration of
///   d rho / dt = -i [H, rho] + (1 / (2 t2)) (sz rho sz - rho)
/// for a constant drive Hamiltonian. The dissipator keeps populations
/// fixed and decays coherences as exp(-t / t2), i.e. pure transverse
/// dephasing concurrent with the drive.
pub fn lindblad_rk4(
    omega: f64,
    phase: f64,
    detuning: f64,
    t2: f64,
    duration: f64,
    steps: usize,
    b0: BlochState,
) -> BlochState {
    let h = hamiltonian(omega, phase, detuning);
    let sz: Mat2 = [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(-1.0, 0.0)],
    ];
    let gamma = if t2.is_infinite() { 0.0 } else { 0.5 / t2 };
    let rhs = |rho: &Mat2| -> Mat2 {
        let comm = mat_add(
            &mat_mul(&h, rho),
            &mat_scale(&mat_mul(rho, &h), C::new(-1.0, 0.0)),
        );
        let mut out = mat_scale(&comm, C::new(0.0, -1.0));
        if gamma > 0.0 {
            let flipped = mat_mul(&sz, &mat_mul(rho, &sz));
            let diss = mat_add(&flipped, &mat_scale(rho, C::new(-1.0, 0.0)));
            out = mat_add(&out, &mat_scale(&diss, C::new(gamma, 0.0)));
        }
        out
    };
    let dt = duration / steps as f64;
    let mut rho = rho_from_bloch(b0);
    for _ in 0..steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&mat_add(&rho, &mat_scale(&k1, C::new(0.5 * dt, 0.0))));
        let k3 = rhs(&mat_add(&rho, &mat_scale(&k2, C::new(0.5 * dt, 0.0))));
        let k4 = rhs(&mat_add(&rho, &mat_scale(&k3, C::new(dt, 0.0))));
        let mut incr = k1;
        incr = mat_add(&incr, &mat_scale(&k2, C::new(2.0, 0.0)));
        incr = mat_add(&incr, &mat_scale(&k3, C::new(2.0, 0.0)));
        incr = mat_add(&incr, &k4);
        rho = mat_add(&rho, &mat_scale(&incr, C::new(dt / 6.0, 0.0)));
    }
    bloch_from_rho(&rho)
}

pub fn bloch_distance(a: BlochState, b: BlochState) -> f64 {
    let dx = a.bx - b.bx;
    let dy = a.by - b.by;
    let dz = a.bz - b.bz;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn assert_bloch_close(got: BlochState, want: BlochState, tol: f64, what: &str) {
    let dist = bloch_distance(got, want);
    assert!(
        dist <= tol,
        "{what}: got ({:.15}, {:.15}, {:.15}), want ({:.15}, {:.15}, {:.15}), distance {dist:.3e} > {tol:.1e}",
        got.bx, got.by, got.bz, want.bx, want.by, want.bz,
    );
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.15}, want {want:.15} (tol {tol:.1e})"
    );
}

/// Small deterministic generator for test-case parameters (not an oracle,
/// and independent of the library's stream derivation).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Random point on the unit sphere.
    pub fn unit_vector(&mut self) -> (f64, f64, f64) {
        loop {
            let x = self.range(-1.0, 1.0);
            let y = self.range(-1.0, 1.0);
            let z = self.range(-1.0, 1.0);
            let n2 = x * x + y * y + z * z;
            if n2 > 1e-4 && n2 <= 1.0 {
                let n = n2.sqrt();
                return (x / n, y / n, z / n);
            }
        }
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
