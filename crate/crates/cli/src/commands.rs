use crate::config::{stage_file, KernelKind, Loaded};
use crate::error::{CliError, Context};
use crate::output::{num, TaskStatus, Writer};
use crate::suite::Slice;
use duplex::green1d::{stratified_green, tangential_cross, FdGreen, LayerStack, PlanarGreen};
use duplex::green3d::{HomogeneousKernel3d, Medium};
use duplex::identities::IdentityReport;
use duplex::kernel::Kernel;
use duplex::quantum::{cascade, matrix_rows, Budget, CascadeBudget};
use duplex::{Grid, Mat4, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Outcome of a command: `true` when every check passed.
pub type Outcome = Result<bool, CliError>;

#[derive(Serialize)]
struct Entry<'a> {
    task: &'a str,
    #[serde(flatten)]
    report: &'a IdentityReport,
}

pub fn verify(loaded: &Loaded) -> Outcome {
    let started = Instant::now();
    loaded.geometry()?;
    let slices = loaded.slices();
    let jobs: Vec<(&str, f64, [f64; 2])> = loaded
        .identities
        .iter()
        .flat_map(|id| slices.iter().map(move |&(w, k)| (id.as_str(), w, k)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(id, omega, k_perp)| Slice { loaded, omega, k_perp }.run(id))
        .collect::<Result<Vec<_>, _>>()?;

    let mut entries = vec![];
    let mut rows = vec![];
    for ((id, _, _), reports) in jobs.iter().zip(&results) {
        for r in reports {
            entries.push(Entry { task: id, report: r });
            let p = |k: &str| r.params.get(k).map_or(String::new(), |v| num(*v));
            rows.push(vec![
                id.to_string(),
                r.identity.clone(),
                p("omega"),
                p("kx"),
                p("ky"),
                p("z1"),
                p("z2"),
                num(r.residual_abs),
                num(r.residual_rel),
                num(r.tolerance),
                r.pass.to_string(),
            ]);
        }
    }
    let tasks: Vec<TaskStatus> = loaded
        .identities
        .iter()
        .map(|id| {
            let mine: Vec<_> = entries.iter().filter(|e| e.task == id).collect();
            let failed = mine.iter().filter(|e| !e.report.pass).count();
            TaskStatus { name: id.clone(), status: if failed == 0 { "pass" } else { "fail" }, reports: mine.len(), failed }
        })
        .collect();
    let all_pass = tasks.iter().all(|t| t.failed == 0);

    let mut w = Writer::new(&loaded.out_dir)?;
    w.json("reports.json", &entries)?;
    w.csv(
        "summary.csv",
        &["task", "check", "omega", "kx", "ky", "z1", "z2", "residual_abs", "residual_rel", "tolerance", "pass"],
        &rows,
    )?;
    crate::output::finish(w, "verify", loaded, tasks, started)?;
    Ok(all_pass)
}

const KERNEL_HEADER: [&str; 14] = ["kind", "omega", "kx", "ky", "x", "y", "z", "xp", "yp", "zp", "row", "col", "re", "im"];

fn kernel_rows<const N: usize>(
    kind: &str,
    omega: f64,
    k: [f64; 2],
    r: [f64; 3],
    rp: [f64; 3],
    m: &nalgebra::SMatrix<C64, N, N>,
    rows: &mut Vec<Vec<String>>,
) {
    for i in 0..N {
        for j in 0..N {
            let mut row = vec![kind.to_string(), num(omega), num(k[0]), num(k[1])];
            row.extend(r.iter().chain(&rp).map(|v| num(*v)));
            row.extend([i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)]);
            rows.push(row);
        }
    }
}

/// Grid for the FD kernel: terminal vacuum on both sides, `cells` per shortest wavelength.
fn fd_grid(stack: &LayerStack, points: &[[f64; 2]], cells_per_wavelength: usize) -> Result<Grid, CliError> {
    let lambda0 = 2.0 * std::f64::consts::PI / stack.k0();
    let faces = stack.interfaces();
    let zs = points.iter().flatten().chain(&faces);
    let lo = zs.clone().fold(f64::INFINITY, |a, b| a.min(*b)) - lambda0;
    let hi = zs.fold(f64::NEG_INFINITY, |a, b| a.max(*b)) + lambda0;
    let n_max = stack
        .layers
        .iter()
        .map(|(_, m)| m)
        .chain([&stack.below, &stack.above])
        .map(|m| (m.eps[(0, 0)] * m.mu[(0, 0)]).sqrt().norm())
        .fold(1.0, f64::max);
    let h = lambda0 / n_max / cells_per_wavelength as f64;
    let cells = ((hi - lo) / h).ceil() as usize;
    let mut grid = Grid::new(lo, h, cells).map_err(|e| CliError::Compute { context: "fd grid".into(), source: e })?;
    grid.transverse = stack.k_perp;
    Ok(grid)
}

pub fn green(loaded: &Loaded) -> Outcome {
    let started = Instant::now();
    let spec = loaded.config.green.as_ref().ok_or_else(|| CliError::Config("'green' section is required".into()))?;
    let planar: Vec<KernelKind> = spec.kinds.iter().copied().filter(|k| *k != KernelKind::Homogeneous3d).collect();
    let slices = loaded.slices();
    let blocks = slices
        .par_iter()
        .map(|&(omega, k)| -> Result<Vec<Vec<String>>, CliError> {
            let ctx = |what: &str| format!("{what} at omega = {omega}, k_perp = {k:?}");
            let mut rows = vec![];
            let profile = loaded.materials.profile(omega).context(|| ctx("material profile"))?;
            let stack = LayerStack::from_profile(&profile, k, omega).context(|| ctx("layer stack"))?;
            for kind in &planar {
                match kind {
                    KernelKind::Stratified => {
                        for &[z, zp] in &spec.points {
                            let m = stratified_green(&stack, z, zp).context(|| ctx("stratified kernel"))?;
                            kernel_rows("stratified", omega, k, [0.0, 0.0, z], [0.0, 0.0, zp], &m, &mut rows);
                        }
                    }
                    KernelKind::Fd => {
                        let grid = fd_grid(&stack, &spec.points, spec.fd_cells_per_wavelength)?;
                        let fd = FdGreen::new(&stack, &grid, spec.fd_eta * stack.k0()).context(|| ctx("fd kernel"))?;
                        let node = |z: f64| (((z - grid.origin) / grid.spacing).round() as usize).min(grid.cells - 1);
                        for &[z, zp] in &spec.points {
                            let s = fd.kernel(node(z), node(zp)).context(|| ctx("fd kernel"))?;
                            for i in 0..4 {
                                for j in 0..4 {
                                    let v = s.value[(i, j)];
                                    let mut row = vec!["fd".into(), num(omega), num(k[0]), num(k[1])];
                                    row.extend([0.0, 0.0, s.out_z[i], 0.0, 0.0, s.src_z[j]].iter().map(|v| num(*v)));
                                    row.extend([i.to_string(), j.to_string(), num(v.re), num(v.im)]);
                                    rows.push(row);
                                }
                            }
                        }
                    }
                    KernelKind::Homogeneous3d => {}
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<Vec<String>> = blocks.into_iter().flatten().collect();

    if spec.kinds.contains(&KernelKind::Homogeneous3d) {
        let m3 = spec.medium_3d.expect("validated");
        let medium = Medium::new(C64::new(m3.eps[0], m3.eps[1]), C64::new(m3.mu[0], m3.mu[1]))
            .context(|| "medium_3d".to_string())?;
        for &omega in &loaded.config.frequencies {
            let g = HomogeneousKernel3d::new(medium, omega).context(|| format!("3D kernel at omega = {omega}"))?;
            for [r, rp] in &spec.points_3d {
                let m = g.eval(r, rp).context(|| format!("3D kernel at omega = {omega}, r = {r:?}, r' = {rp:?}"))?;
                kernel_rows("homogeneous_3d", omega, [0.0, 0.0], *r, *rp, &m, &mut rows);
            }
        }
    }

    let mut w = Writer::new(&loaded.out_dir)?;
    w.csv("kernels.csv", &KERNEL_HEADER, &rows)?;
    let tasks = spec
        .kinds
        .iter()
        .map(|k| {
            let name = serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let reports = rows.iter().filter(|r| r[0] == name).count();
            TaskStatus { name, status: "done", reports, failed: 0 }
        })
        .collect();
    crate::output::finish(w, "green", loaded, tasks, started)?;
    Ok(true)
}

#[derive(Serialize)]
struct StageReport {
    span: Option<(f64, f64)>,
    transfer: Vec<Vec<[f64; 2]>>,
    noise: Vec<Vec<[f64; 2]>>,
    /// Noise of this stage as seen at the chain output.
    contribution: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct SliceReport {
    omega: f64,
    kx: f64,
    ky: f64,
    transfer: Vec<Vec<[f64; 2]>>,
    noise: Vec<Vec<[f64; 2]>>,
    output: Vec<Vec<[f64; 2]>>,
    transmission: f64,
    added_noise: f64,
    stages: Vec<StageReport>,
    closure: IdentityReport,
}

/// A chain evaluated on one slice with the kernels of its end stages.
pub struct ChainRun {
    pub budget: CascadeBudget,
    first: PlanarGreen,
    last: PlanarGreen,
}

/// Runs the configured chain on one slice.
pub fn chain_budget(loaded: &Loaded, omega: f64, k: [f64; 2]) -> Result<ChainRun, CliError> {
    let chain = loaded.config.chain.as_ref().ok_or_else(|| CliError::Config("'chain' section is required".into()))?;
    let units = loaded.config.units;
    let q = loaded.config.quadrature;
    let quad = duplex::quantum::NoiseQuadrature { panels: 2 * q.panels, order: q.order };
    let mut budgets = vec![];
    let mut kernels = vec![];
    for (i, s) in chain.iter().enumerate() {
        let ctx = || format!("chain stage {} at omega = {omega}, k_perp = {k:?}", i + 1);
        let file = stage_file(&loaded.materials, s).context(ctx)?;
        let profile = file.profile(omega).context(ctx)?;
        let g = PlanarGreen::new(&LayerStack::from_profile(&profile, k, omega).context(ctx)?).context(ctx)?;
        budgets.push(Budget::stage(&g, s.z_from, s.z_to, quad, units).context(ctx)?);
        kernels.push(g);
    }
    let budget = cascade(&budgets, omega, k, units, loaded.tolerance("cascade"))
        .map_err(|e| CliError::Config(format!("inconsistent chain: {e}")))?;
    let vacuum = || {
        LayerStack::homogeneous(duplex::media::MaterialTensor::vacuum(), k, omega)
            .and_then(|s| PlanarGreen::new(&s))
            .context(|| format!("vacuum kernel at omega = {omega}"))
    };
    let last = match kernels.pop() {
        Some(g) => g,
        None => vacuum()?,
    };
    let first = if kernels.is_empty() { last.clone() } else { kernels.swap_remove(0) };
    Ok(ChainRun { budget, first, last })
}

type Basis = nalgebra::SMatrix<C64, 4, 2>;

fn flux(u: &nalgebra::SVector<C64, 4>) -> f64 {
    (u.adjoint() * tangential_cross() * u)[(0, 0)].re.abs()
}

impl ChainRun {
    /// Forward and backward mode bases at the input and output planes.
    fn bases(&self) -> (Basis, Basis, Basis, Basis) {
        let (a, b) = self.budget.total.span.unwrap_or((0.0, 0.0));
        let (f1, b1) = self.first.modes(a);
        let (f2, b2) = self.last.modes(b);
        if b >= a {
            (f1, b1, f2, b2)
        } else {
            (b1, f1, b2, f2)
        }
    }

    /// Power transmittance for forward illumination, summed over both polarizations, and the
    /// share of the output forward-mode commutator supplied by the chain's own noise.
    /// NaN when the input modes carry no flux (evanescent k⊥).
    pub fn forward_metrics(&self) -> (f64, f64) {
        let (fwd1, bwd1, fwd2, bwd2) = self.bases();
        let t = self.budget.total.transfer;
        let mut v2 = Mat4::zeros();
        v2.fixed_view_mut::<4, 2>(0, 0).copy_from(&fwd2);
        v2.fixed_view_mut::<4, 2>(0, 2).copy_from(&bwd2);
        let (Some(v2_inv), Some(n_inv)) = (v2.try_inverse(), tangential_cross().try_inverse()) else {
            return (f64::NAN, f64::NAN);
        };
        let x = (v2_inv * t).fixed_rows::<2>(2).into_owned();
        let Some(back) = (x * bwd1).try_inverse() else {
            return (f64::NAN, f64::NAN);
        };
        let u1 = fwd1 - bwd1 * back * x * fwd1;
        let u2 = t * u1;
        let (mut incident, mut transmitted) = (0.0, 0.0);
        for j in 0..2 {
            incident += flux(&fwd1.column(j).into_owned());
            transmitted += flux(&u2.column(j).into_owned());
        }
        let extract = v2_inv.fixed_rows::<2>(0).into_owned() * n_inv;
        let share = |m: &Mat4| (extract * m * extract.adjoint()).trace().norm();
        let added = share(&self.budget.total.noise) / share(&self.budget.output);
        if incident <= f64::EPSILON * transmitted.max(1.0) {
            return (f64::NAN, added);
        }
        (transmitted / incident, added)
    }
}

pub fn cascade_cmd(loaded: &Loaded) -> Outcome {
    let started = Instant::now();
    let budgets = loaded
        .slices()
        .par_iter()
        .map(|&(omega, k)| chain_budget(loaded, omega, k).map(|c| (omega, k, c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = vec![];
    let mut rows = vec![];
    for (omega, k, run) in budgets {
        let (transmission, added_noise) = run.forward_metrics();
        let c = run.budget;
        rows.push(vec![
            num(omega),
            num(k[0]),
            num(k[1]),
            num(transmission),
            num(added_noise),
            num(c.closure.residual_rel),
            c.closure.pass.to_string(),
        ]);
        reports.push(SliceReport {
            omega,
            kx: k[0],
            ky: k[1],
            transfer: matrix_rows(&c.total.transfer),
            noise: matrix_rows(&c.total.noise),
            output: matrix_rows(&c.output),
            transmission,
            added_noise,
            stages: c
                .stages
                .iter()
                .zip(&c.contributions)
                .map(|(s, n)| StageReport {
                    span: s.span,
                    transfer: matrix_rows(&s.transfer),
                    noise: matrix_rows(&s.noise),
                    contribution: matrix_rows(n),
                })
                .collect(),
            closure: c.closure,
        });
    }
    let failed = reports.iter().filter(|r| !r.closure.pass).count();
    let mut w = Writer::new(&loaded.out_dir)?;
    w.json("cascade.json", &reports)?;
    w.csv(
        "cascade.csv",
        &["omega", "kx", "ky", "transmission", "added_noise", "closure_residual", "pass"],
        &rows,
    )?;
    let tasks = vec![TaskStatus {
        name: "cascade".into(),
        status: if failed == 0 { "pass" } else { "fail" },
        reports: reports.len(),
        failed,
    }];
    crate::output::finish(w, "cascade", loaded, tasks, started)?;
    Ok(failed == 0)
}

#[derive(Serialize)]
struct MaterialRow {
    material: String,
    omega: f64,
    chi_e: [f64; 2],
    chi_m: [f64; 2],
    index: [f64; 2],
    min_loss_eigenvalue: f64,
    passive: bool,
}

pub fn material_info(loaded: &Loaded) -> Outcome {
    let started = Instant::now();
    let mut table = vec![];
    for name in loaded.materials.materials.keys() {
        let m = loaded.materials.material(name).context(|| format!("material '{name}'"))?;
        for &omega in &loaded.config.frequencies {
            let ctx = || format!("material '{name}' at omega = {omega}");
            let (ce, cm) = m.susceptibilities(omega).context(ctx)?;
            let t = m.tensor(omega).context(ctx)?;
            let n = Medium::new(C64::new(1.0, 0.0) + ce, C64::new(1.0, 0.0) + cm).context(ctx)?.index();
            table.push(MaterialRow {
                material: name.clone(),
                omega,
                chi_e: [ce.re, ce.im],
                chi_m: [cm.re, cm.im],
                index: [n.re, n.im],
                min_loss_eigenvalue: t.min_loss_eigenvalue(),
                passive: t.is_passive(0.0),
            });
        }
    }
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            let mut row = vec![r.material.clone(), num(r.omega)];
            row.extend([r.chi_e, r.chi_m, r.index].iter().flatten().map(|v| num(*v)));
            row.extend([num(r.min_loss_eigenvalue), r.passive.to_string()]);
            row
        })
        .collect();
    let mut w = Writer::new(&loaded.out_dir)?;
    w.json("materials.json", &table)?;
    w.csv(
        "materials.csv",
        &["material", "omega", "chi_e_re", "chi_e_im", "chi_m_re", "chi_m_im", "n_re", "n_im", "min_loss_eigenvalue", "passive"],
        &rows,
    )?;
    let tasks = loaded
        .materials
        .materials
        .keys()
        .map(|name| {
            let mine: Vec<_> = table.iter().filter(|r| &r.material == name).collect();
            let failed = mine.iter().filter(|r| !r.passive).count();
            TaskStatus { name: name.clone(), status: if failed == 0 { "passive" } else { "active" }, reports: mine.len(), failed }
        })
        .collect();
    crate::output::finish(w, "material-info", loaded, tasks, started)?;
    Ok(true)
}
