use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use clap::Args;
use rand::Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use ontolab_core::{bch, bell, cogwheel, dham, fermi2q, hilbert, lattice2d, neutrino, pq, rng, rotator};

use crate::error::{ensure, CliError, CliResult};
use crate::table::{Cell, Output, ResultTable};

pub trait Experiment {
    /// Fills every unset parameter with its default.
    fn with_defaults(self) -> Self;
    fn execute(&self, seed: Option<u64>) -> CliResult<Output>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub stochastic: bool,
}

fn from_map<T: DeserializeOwned>(params: &Map<String, Value>) -> CliResult<T> {
    Ok(serde_json::from_value(Value::Object(params.clone()))?)
}

/// Config parameters underneath, explicitly given flags on top.
fn overlay<T: Serialize + DeserializeOwned>(args: &T, config: Option<&Map<String, Value>>) -> CliResult<T> {
    let mut merged = config.cloned().unwrap_or_default();
    if let Value::Object(given) = serde_json::to_value(args)? {
        merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    }
    from_map(&merged)
}

macro_rules! experiments {
    ($($variant:ident($args:ty) = $name:literal, $stochastic:literal, $desc:literal;)*) => {
        #[derive(Debug, Clone)]
        pub enum ExperimentArgs {
            $($variant($args),)*
        }

        pub const CATALOGUE: &[CatalogueEntry] = &[
            $(CatalogueEntry { name: $name, description: $desc, stochastic: $stochastic },)*
        ];

        impl ExperimentArgs {
            pub fn name(&self) -> &'static str {
                match self {
                    $(Self::$variant(_) => $name,)*
                }
            }

            pub fn from_params(name: &str, params: &Map<String, Value>) -> CliResult<Self> {
                match name {
                    $($name => Ok(Self::$variant(from_map(params)?)),)*
                    other => Err(CliError::Config(format!("unknown experiment {other:?}"))),
                }
            }

            pub fn overlay(self, config: Option<&Map<String, Value>>) -> CliResult<Self> {
                match self {
                    $(Self::$variant(a) => Ok(Self::$variant(overlay(&a, config)?)),)*
                }
            }

            pub fn with_defaults(self) -> Self {
                match self {
                    $(Self::$variant(a) => Self::$variant(a.with_defaults()),)*
                }
            }

            pub fn params_json(&self) -> Value {
                match self {
                    $(Self::$variant(a) => serde_json::to_value(a).expect("parameters serialise"),)*
                }
            }

            pub fn execute(&self, seed: Option<u64>) -> CliResult<Output> {
                match self {
                    $(Self::$variant(a) => a.execute(seed),)*
                }
            }
        }
    };
}

experiments! {
    OmegaCurves(OmegaCurvesArgs) = "hilbert.omega_curves", false, "Truncated Fourier images of the eigenphase for the three series schemes";
    CogwheelSpectrum(CogwheelSpectrumArgs) = "cogwheel.spectrum", false, "Energy levels of a permutation built from cogwheel cycles with offsets";
    CogwheelClock(CogwheelClockArgs) = "cogwheel.clock", false, "Eigenvalues of the N-state clock Hamiltonian against 2πk/N";
    RotatorMatrices(RotatorMatricesArgs) = "rotator.matrices", false, "Overlap probabilities between angular momentum states and beable states";
    PqWavelet(PqWaveletArgs) = "pq.wavelet", false, "Real-space wave function of a lattice state |Q,P>";
    PqEdge(PqEdgeArgs) = "pq.edge", false, "Convergence of the [q,p] defect to the edge projector over window sizes";
    BellChsh(BellChshArgs) = "bell.chsh", true, "CHSH value by quadrature and by Monte Carlo sampling of the hidden variable";
    BellMousedrop(BellMousedropArgs) = "bell.mousedrop", false, "Conditional density of the hidden polarisation angle";
    Lattice2dRun(Lattice2dRunArgs) = "lattice2d.run", true, "Integer field automaton time series with movers and exact energy";
    Lattice2dDispersion(Lattice2dDispersionArgs) = "lattice2d.dispersion", false, "Stability and frequency of lattice modes in one or two dimensions";
    NeutrinoCorrelations(NeutrinoCorrelationsArgs) = "neutrino.correlations", false, "Vacuum pair correlation of radial beables, closed form and quadrature";
    DhamOrbit(DhamOrbitArgs) = "dham.orbit", false, "Orbit of one integer (Q,P) pair along its energy contour";
    DhamSpeed(DhamSpeedArgs) = "dham.speed", false, "Lattice speed along contours compared with the continuum Hamilton speed";
    BchCompare(BchCompareArgs) = "bch.compare", true, "Residual of the local Hamiltonian density against the two-step automaton per order";
    Fermi2qSpectrum(Fermi2qSpectrumArgs) = "fermi2q.spectrum", false, "Fock-space spectrum of a second-quantised permutation";
}

fn table(columns: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> CliResult<Output> {
    let mut t = ResultTable::new(columns);
    for r in rows {
        t.push(r)?;
    }
    Ok(Output::Table(t))
}

fn need_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Config("this experiment is stochastic and needs --seed".into()))
}

fn positive(name: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be positive")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaCurvesArgs {
    /// Damping lengths or highest series indices, comma separated.
    #[arg(long = "R", value_delimiter = ',')]
    #[serde(rename = "R")]
    pub cutoffs: Option<Vec<f64>>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl Experiment for OmegaCurvesArgs {
    fn with_defaults(self) -> Self {
        Self { cutoffs: self.cutoffs.or(Some(vec![2.0, 4.0, 8.0, 16.0])), points: self.points.or(Some(201)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let points = positive("points", self.points.unwrap_or(201))?.max(2);
        let schemes = [hilbert::FourierScheme::PlainDamped, hilbert::FourierScheme::ArcsinCenter, hilbert::FourierScheme::Stretched];
        let mut rows = Vec::new();
        for scheme in schemes {
            for &r in self.cutoffs.as_deref().unwrap_or_default() {
                if r <= 0.0 {
                    return Err(CliError::Config("R must be positive".into()));
                }
                for i in 0..points {
                    let omega = TAU * i as f64 / (points - 1) as f64;
                    rows.push(vec![
                        Cell::from(omega),
                        Cell::from(hilbert::approx_curve(omega, r, scheme)),
                        Cell::from(r),
                        Cell::from(scheme.name()),
                    ]);
                }
            }
        }
        table(&["omega", "omega_approx", "R", "scheme"], rows)
    }
}

/// One cycle "length:offset", e.g. "5:0.4".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CycleSpec {
    pub len: usize,
    pub delta_e: f64,
}

impl FromStr for CycleSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (len, delta) = s.split_once(':').unwrap_or((s, "0"));
        let len = len.trim().parse().map_err(|_| format!("bad cycle length in {s:?}"))?;
        let delta_e = delta.trim().parse().map_err(|_| format!("bad energy offset in {s:?}"))?;
        Ok(Self { len, delta_e })
    }
}

impl TryFrom<String> for CycleSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<CycleSpec> for String {
    fn from(c: CycleSpec) -> String {
        c.to_string()
    }
}

impl fmt::Display for CycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len, self.delta_e)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CogwheelSpectrumArgs {
    /// Comma-separated cycles "length:offset".
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cycles: Option<Vec<CycleSpec>>,
}

impl Experiment for CogwheelSpectrumArgs {
    fn with_defaults(self) -> Self {
        let default = ["3:0.0", "5:0.4", "7:1.1"].iter().map(|s| s.parse().expect("valid default")).collect();
        Self { cycles: self.cycles.or(Some(default)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let cycles = self.cycles.clone().unwrap_or_default();
        let columns = ["level_index", "energy", "cycle"];
        if cycles.is_empty() {
            return table(&columns, []);
        }
        let lengths: Vec<usize> = cycles.iter().map(|c| c.len).collect();
        let offsets: Vec<f64> = cycles.iter().map(|c| c.delta_e).collect();
        let model = cogwheel::PermutationModel::from_cycle_lengths(&lengths)?;
        let spectrum = cogwheel::decompose_cycles(&model, Some(&offsets))?;
        ensure(spectrum.levels.len() == model.size(), || "level count differs from state count".into())?;
        table(
            &columns,
            spectrum.levels.iter().enumerate().map(|(i, l)| vec![Cell::from(i), Cell::from(l.energy), Cell::from(l.cycle)]),
        )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CogwheelClockArgs {
    #[arg(long)]
    pub n: Option<usize>,
}

impl Experiment for CogwheelClockArgs {
    fn with_defaults(self) -> Self {
        Self { n: self.n.or(Some(3)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let n = positive("n", self.n.unwrap_or(3))?;
        let mut e = cogwheel::hamiltonian_matrix(n)?.eigenvalues();
        e.sort_by(f64::total_cmp);
        let rows: Vec<Vec<Cell>> = e
            .iter()
            .enumerate()
            .map(|(k, &v)| vec![Cell::from(k), Cell::from(v), Cell::from(TAU * k as f64 / n as f64)])
            .collect();
        let worst = e.iter().enumerate().map(|(k, v)| (v - TAU * k as f64 / n as f64).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-10, || format!("clock eigenvalues off by {worst:.3e}"))?;
        table(&["k", "energy", "expected"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotatorMatricesArgs {
    /// Total angular momentum, integer or half-integer.
    #[arg(long)]
    pub ell: Option<f64>,
}

impl Experiment for RotatorMatricesArgs {
    fn with_defaults(self) -> Self {
        Self { ell: self.ell.or(Some(40.0)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let params = rotator::RotatorParams::from_ell(self.ell.unwrap_or(40.0))?;
        let overlaps = rotator::beable_overlaps(params)?;
        let n = params.dim();
        let mut rows = Vec::with_capacity(n * n);
        for j in 0..n {
            let total: f64 = (0..n).map(|s| overlaps[(j, s)].norm_sqr()).sum();
            ensure((total - 1.0).abs() < 1e-8, || format!("row m1 = {} sums to {total}", params.m(j)))?;
            for s in 0..n {
                rows.push(vec![Cell::from(params.m(j)), Cell::from(s), Cell::from(overlaps[(j, s)].norm_sqr())]);
            }
        }
        table(&["m1", "sigma", "probability"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqWaveletArgs {
    #[arg(long)]
    pub grid: Option<usize>,
    /// The grid covers [−range, range].
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long = "Q", allow_hyphen_values = true)]
    #[serde(rename = "Q")]
    pub big_q: Option<i64>,
    #[arg(long = "P", allow_hyphen_values = true)]
    #[serde(rename = "P")]
    pub big_p: Option<i64>,
    /// Quadrature points in κ per evaluation.
    #[arg(long)]
    pub quad: Option<usize>,
}

impl Experiment for PqWaveletArgs {
    fn with_defaults(self) -> Self {
        Self {
            grid: self.grid.or(Some(1601)),
            range: self.range.or(Some(8.0)),
            big_q: self.big_q.or(Some(0)),
            big_p: self.big_p.or(Some(0)),
            quad: self.quad.or(Some(1024)),
        }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let grid = positive("grid", self.grid.unwrap_or(1601))?.max(2);
        let range = self.range.unwrap_or(8.0);
        let (big_q, big_p, quad) = (self.big_q.unwrap_or(0), self.big_p.unwrap_or(0), self.quad.unwrap_or(1024));
        let values: Vec<(f64, num_complex::Complex64)> = (0..grid)
            .into_par_iter()
            .map(|i| {
                let q = -range + 2.0 * range * i as f64 / (grid - 1) as f64;
                pq::wavefunction(q, big_q, big_p, quad).map(|v| (q, v))
            })
            .collect::<Result<_, _>>()?;
        table(
            &["q", "re", "im", "abs"],
            values.into_iter().map(|(q, v)| vec![Cell::from(q), Cell::from(v.re), Cell::from(v.im), Cell::from(v.norm())]),
        )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqEdgeArgs {
    /// Odd window widths.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    /// The central block covers |Q|, |P| ≤ block.
    #[arg(long)]
    pub block: Option<i64>,
}

/// Largest deviation of the central block of [q,p]/i − 𝟙 from −|ψe⟩⟨ψe|.
pub fn edge_block_error(width: usize, block: i64) -> CliResult<f64> {
    let window = pq::PQLatticeWindow::new(width)?;
    let defect = pq::commutator_defect_block(window, block)?;
    let limit = pq::edge_projector_limit(pq::PQLatticeWindow::new((2 * block + 1) as usize)?);
    Ok(ontolab_core::linalg::max_abs_diff(&defect, &limit))
}

impl Experiment for PqEdgeArgs {
    fn with_defaults(self) -> Self {
        Self { windows: self.windows.or(Some(vec![21, 41, 81])), block: self.block.or(Some(4)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let block = self.block.unwrap_or(4);
        let rows = self
            .windows
            .clone()
            .unwrap_or_default()
            .into_iter()
            .map(|w| Ok(vec![Cell::from(w), Cell::from(edge_block_error(w, block)?)]))
            .collect::<CliResult<Vec<_>>>()?;
        table(&["window", "max_error"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellChshArgs {
    /// a, a', b, b' in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    /// Monte Carlo trials per correlation.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub quad: Option<usize>,
}

impl Experiment for BellChshArgs {
    fn with_defaults(self) -> Self {
        Self {
            angles: self.angles.or(Some(vec![22.5, -22.5, 0.0, 45.0])),
            n: self.n.or(Some(1_000_000)),
            quad: self.quad.or(Some(1024)),
        }
    }

    fn execute(&self, seed: Option<u64>) -> CliResult<Output> {
        let seed = need_seed(seed)?;
        let angles: [f64; 4] = self
            .angles
            .clone()
            .unwrap_or_default()
            .try_into()
            .map_err(|_| CliError::Config("angles needs exactly four values".into()))?;
        let settings = bell::Settings::from_degrees(angles);
        let quadrature = bell::chsh(&settings, self.quad.unwrap_or(1024))?;
        let mc = bell::monte_carlo_chsh(&settings, positive("n", self.n.unwrap_or(1_000_000))?, seed)?;
        Ok(Output::Json(serde_json::json!({
            "S_quadrature": quadrature,
            "S_montecarlo": mc.s,
            "stderr": mc.stderr,
        })))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellMousedropArgs {
    /// Alice's setting in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl Experiment for BellMousedropArgs {
    fn with_defaults(self) -> Self {
        Self { a: self.a.or(Some(0.0)), b: self.b.or(Some(0.0)), points: self.points.or(Some(721)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let (a, b) = (self.a.unwrap_or(0.0).to_radians(), self.b.unwrap_or(0.0).to_radians());
        let points = positive("points", self.points.unwrap_or(721))?.max(2);
        table(
            &["c", "w"],
            (0..points).map(|i| {
                let c = PI * i as f64 / (points - 1) as f64;
                vec![Cell::from(c), Cell::from(bell::w_conditional(c, a, b))]
            }),
        )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice2dRunArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial Q and P⁺ are uniform in [−amplitude, amplitude].
    #[arg(long)]
    pub amplitude: Option<i64>,
}

impl Experiment for Lattice2dRunArgs {
    fn with_defaults(self) -> Self {
        Self { sites: self.sites.or(Some(64)), steps: self.steps.or(Some(256)), amplitude: self.amplitude.or(Some(3)) }
    }

    fn execute(&self, seed: Option<u64>) -> CliResult<Output> {
        let seed = need_seed(seed)?;
        let sites = positive("L", self.sites.unwrap_or(64))?;
        let steps = self.steps.unwrap_or(256);
        let amp = self.amplitude.unwrap_or(3).abs();
        let mut r = rng::stream(seed, 0);
        let q: Vec<i64> = (0..sites).map(|_| r.random_range(-amp..=amp)).collect();
        let p: Vec<i64> = (0..sites).map(|_| r.random_range(-amp..=amp)).collect();
        let start = lattice2d::IntegerFieldState::new(q, p)?;
        let energy = start.classical_energy();
        let energy_f = *energy.numer() as f64 / *energy.denom() as f64;
        let mut rows = Vec::with_capacity((steps + 1) * sites);
        let mut state = start.clone();
        let mut movers = state.movers();
        for t in 0..=steps {
            if t > 0 {
                let next = state.step();
                let next_movers = next.movers();
                ensure(next.classical_energy() == energy, || format!("energy changed at step {t}"))?;
                for x in 0..sites {
                    ensure(
                        next_movers.left[x] == movers.left[(x + 1) % sites]
                            && next_movers.right[x] == movers.right[(x + sites - 1) % sites],
                        || format!("movers did not propagate at step {t}, site {x}"),
                    )?;
                }
                state = next;
                movers = next_movers;
            }
            for x in 0..sites {
                rows.push(vec![
                    Cell::from(t),
                    Cell::from(x),
                    Cell::from(state.q()[x]),
                    Cell::from(state.pplus()[x]),
                    Cell::from(movers.left[x]),
                    Cell::from(movers.right[x]),
                    Cell::from(energy_f),
                ]);
            }
        }
        let back = (0..steps).fold(state, |s, _| s.step_back());
        ensure(back == start, || "backward evolution did not return to the initial state".into())?;
        table(&["t", "x", "Q", "Pplus", "AL", "AR", "energy"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice2dDispersionArgs {
    /// Spatial dimensions, 1 or 2.
    #[arg(long)]
    pub dims: Option<usize>,
    /// Grid points per axis over [0, π].
    #[arg(long)]
    pub points: Option<usize>,
}

impl Experiment for Lattice2dDispersionArgs {
    fn with_defaults(self) -> Self {
        Self { dims: self.dims.or(Some(2)), points: self.points.or(Some(33)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let dims = self.dims.unwrap_or(2);
        if !(1..=2).contains(&dims) {
            return Err(CliError::Config("dims must be 1 or 2".into()));
        }
        let points = positive("points", self.points.unwrap_or(33))?.max(2);
        let axis: Vec<f64> = (0..points).map(|i| PI * i as f64 / (points - 1) as f64).collect();
        let ks: Vec<Vec<f64>> = if dims == 1 {
            axis.iter().map(|&k| vec![k]).collect()
        } else {
            axis.iter().flat_map(|&k1| axis.iter().map(move |&k2| vec![k1, k2])).collect()
        };
        let mut rows = Vec::with_capacity(ks.len());
        for k in ks {
            let rep = lattice2d::dispersion_stability(&k)?;
            let (stable, omega, growth) = match rep.stability {
                lattice2d::Stability::Stable { omega } => (true, omega, 1.0),
                lattice2d::Stability::Unstable { growth } => (false, f64::NAN, growth),
            };
            rows.push(vec![
                Cell::from(k[0]),
                Cell::from(k.get(1).copied().unwrap_or(0.0)),
                Cell::from(rep.s),
                Cell::from(stable),
                Cell::from(omega),
                Cell::from(growth),
            ]);
        }
        table(&["k1", "k2", "s", "stable", "omega", "growth"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutrinoCorrelationsArgs {
    #[arg(long)]
    pub dr: Option<f64>,
    /// Largest Δr/dr.
    #[arg(long)]
    pub range: Option<usize>,
}

impl Experiment for NeutrinoCorrelationsArgs {
    fn with_defaults(self) -> Self {
        Self { dr: self.dr.or(Some(1.0)), range: self.range.or(Some(64)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let dr = self.dr.unwrap_or(1.0);
        if dr <= 0.0 {
            return Err(CliError::Config("dr must be positive".into()));
        }
        let rows = (0..=self.range.unwrap_or(64))
            .map(|k| {
                let delta = k as f64 * dr;
                let exact = neutrino::vacuum_pair_correlation(delta, 0.0, dr)?;
                let quad = neutrino::vacuum_pair_correlation_quadrature(delta, 0.0, dr)?;
                ensure((exact - quad).abs() < 1e-10, || format!("quadrature differs by {:.3e} at Δr = {delta}", (exact - quad).abs()))?;
                Ok(vec![Cell::from(delta), Cell::from(exact), Cell::from(quad)])
            })
            .collect::<CliResult<Vec<_>>>()?;
        table(&["delta_r", "exact", "quadrature"], rows)
    }
}

/// Named single-pair systems.
pub fn dham_system(name: &str) -> CliResult<dham::DHamSystem1D> {
    match name {
        "osc" => Ok(dham::DHamSystem1D::oscillator()),
        "quartic" => Ok(dham::DHamSystem1D::new(Arc::new(|p| p * (p - 1) / 2), Arc::new(|q| q * q * (q * q - 1) / 12))),
        other => Err(CliError::Config(format!("unknown system {other:?}; expected osc or quartic"))),
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhamOrbitArgs {
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long = "E", allow_hyphen_values = true)]
    #[serde(rename = "E")]
    pub energy: Option<i64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Half width of the square search window around the origin.
    #[arg(long)]
    pub window: Option<i64>,
}

impl Experiment for DhamOrbitArgs {
    fn with_defaults(self) -> Self {
        Self {
            system: self.system.or(Some("osc".into())),
            energy: self.energy.or(Some(12)),
            steps: self.steps.or(Some(100_000)),
            window: self.window.or(Some(64)),
        }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let system = dham_system(self.system.as_deref().unwrap_or("osc"))?;
        let e = self.energy.unwrap_or(12);
        let window = dham::Window::around((0, 0), self.window.unwrap_or(64));
        let set = dham::contour_points(&system, e, window)?;
        let start = set
            .cycles()
            .flat_map(|c| c.points.iter().copied())
            .chain(set.fixed_points.iter().copied())
            .min()
            .ok_or_else(|| CliError::Config(format!("no lattice point has H = {e} inside the window")))?;
        let mut evo = dham::PairEvolution::new(system.clone(), window);
        let steps = self.steps.unwrap_or(100_000);
        let mut rows = Vec::with_capacity(steps + 1);
        let mut s = start;
        for t in 0..=steps {
            if t > 0 {
                s = evo.step(s, dham::Direction::Forward)?.state;
            }
            let h = system.h(s.0, s.1);
            ensure(h == e, || format!("energy changed to {h} at step {t}"))?;
            rows.push(vec![Cell::from(t), Cell::from(s.0), Cell::from(s.1), Cell::from(h)]);
        }
        let back = (0..steps).try_fold(s, |x, _| evo.step(x, dham::Direction::Backward).map(|o| o.state))?;
        ensure(back == start, || "backward steps did not return to the start".into())?;
        table(&["t", "Q", "P", "H"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhamSpeedArgs {
    #[arg(long)]
    pub system: Option<String>,
    /// Lowest energies of the bands, comma separated.
    #[arg(long = "E", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "E")]
    pub energies: Option<Vec<i64>>,
    /// Levels per band.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub window: Option<i64>,
}

impl Experiment for DhamSpeedArgs {
    fn with_defaults(self) -> Self {
        Self {
            system: self.system.or(Some("osc".into())),
            energies: self.energies.or(Some(vec![20, 50, 100])),
            samples: self.samples.or(Some(40)),
            window: self.window.or(Some(64)),
        }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let system = dham_system(self.system.as_deref().unwrap_or("osc"))?;
        let window = dham::Window::around((0, 0), self.window.unwrap_or(64));
        let samples = positive("samples", self.samples.unwrap_or(40))?;
        let rows = self
            .energies
            .clone()
            .unwrap_or_default()
            .into_par_iter()
            .map(|e| {
                let s = dham::speed_statistics(&system, e, samples, window)?;
                Ok(vec![
                    Cell::from(e),
                    Cell::from(samples),
                    Cell::from(s.points),
                    Cell::from(s.continuum_period),
                    Cell::from(s.ratio.unwrap_or(f64::NAN)),
                ])
            })
            .collect::<CliResult<Vec<_>>>()?;
        table(&["E", "samples", "points", "continuum_period", "ratio"], rows)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BchCompareArgs {
    /// Even number of ring sites, each a qubit.
    #[arg(long)]
    pub sites: Option<usize>,
    /// Highest odd order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Operator norm of every local generator.
    #[arg(long)]
    pub norm: Option<f64>,
}

impl Experiment for BchCompareArgs {
    fn with_defaults(self) -> Self {
        Self { sites: self.sites.or(Some(4)), order: self.order.or(Some(3)), norm: self.norm.or(Some(0.3)) }
    }

    fn execute(&self, seed: Option<u64>) -> CliResult<Output> {
        let seed = need_seed(seed)?;
        let order = self.order.unwrap_or(3);
        if order.is_multiple_of(2) || order > 7 {
            return Err(CliError::Config("order must be 1, 3, 5 or 7".into()));
        }
        let ring = bch::Ring::new(self.sites.unwrap_or(4), 2)?;
        let automaton = bch::TwoStepAutomaton::random(ring, self.norm.unwrap_or(0.3), &mut rng::stream(seed, 0))?;
        let rows: Vec<Value> = automaton
            .density_residuals(order)?
            .into_iter()
            .map(|(o, r)| serde_json::json!({ "order": o, "residual": r }))
            .collect();
        Ok(Output::Json(serde_json::json!({ "sites": ring.sites, "errors": rows })))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fermi2qSpectrumArgs {
    /// Image of each mode, e.g. 2,0,1.
    #[arg(long, value_delimiter = ',')]
    pub perm: Option<Vec<usize>>,
    /// Use eigenphases in (−π, π] instead of [0, 2π).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub recenter: Option<bool>,
}

impl Experiment for Fermi2qSpectrumArgs {
    fn with_defaults(self) -> Self {
        Self { perm: self.perm.or(Some(vec![2, 0, 1])), recenter: self.recenter.or(Some(false)) }
    }

    fn execute(&self, _: Option<u64>) -> CliResult<Output> {
        let perm = self.perm.clone().unwrap_or_default();
        let columns = ["level", "energy"];
        if perm.is_empty() {
            return table(&columns, [vec![Cell::from(0usize), Cell::from(0.0)]]);
        }
        let h = fermi2q::permutation_hamiltonian(&perm, self.recenter.unwrap_or(false))?;
        let levels = fermi2q::fock_spectrum(h.matrix())?;
        let sums = fermi2q::subset_sums(&h.eigenvalues());
        let worst = levels.iter().zip(&sums).map(|(l, s)| (l.1 - s).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-9, || format!("Fock spectrum differs from subset sums by {worst:.3e}"))?;
        table(&columns, levels.iter().enumerate().map(|(i, l)| vec![Cell::from(i), Cell::from(l.1)]))
    }
}
