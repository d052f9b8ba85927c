//! Closed-loop simulation of the aircraft tracking controller.
//!
//! At every sample the horizon problem is rebuilt from the observed state
//! and re-solved; the first control of the plan is projected onto the
//! admissible set and applied to the plant, which uses the same model as
//! the predictor. A disturbance, when configured, resets the observed state
//! to the initial one at the given step. Warm starting seeds each solve
//! with the previous plan shifted by one stage (last stage repeated).

use super::afti16::{a_dt, afti16, b_dt, control_set, SAMPLE_TIME_S};
use super::random_init;
use crate::alm::{alm_solve, AlmOptions, AlmStatus, InitialPoint};
use crate::subproblem::Formulation;
use nalgebra::{DVector, Vector2, Vector4};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub horizon: usize,
    pub steps: usize,
    pub warm: bool,
    pub x_start: Vector4<f64>,
    /// Step index at which the observed state is reset to `x_start`.
    pub disturb_at: Option<usize>,
    pub solver: AlmOptions,
    /// Base seed for cold-start initializations (seed + step per solve).
    pub cold_seed: u64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 10,
            steps: 100,
            warm: false,
            x_start: Vector4::new(10.0, 10.0, 10.0, 10.0),
            disturb_at: Some(50),
            solver: AlmOptions {
                formulation: Formulation::CondensedHard,
                subsolver: crate::alm::Subsolver::Nmpg,
                ..AlmOptions::default()
            },
            cold_seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MpcStepRow {
    pub step: usize,
    /// Observed state at this step, after any disturbance reset.
    pub state: Vector4<f64>,
    /// Control actually applied (projected onto the admissible set; zero
    /// when the solve failed).
    pub control: Vector2<f64>,
    pub runtime_s: f64,
    pub status: AlmStatus,
    pub warm: bool,
    pub disturbed: bool,
}

#[derive(Debug, Clone)]
pub struct MpcTrace {
    pub rows: Vec<MpcStepRow>,
    /// Plant state after the last applied control.
    pub final_state: Vector4<f64>,
    pub horizon: usize,
    pub warm: bool,
}

impl MpcTrace {
    /// Observed states, one per step plus the terminal state.
    pub fn states(&self) -> Vec<Vector4<f64>> {
        let mut out: Vec<_> = self.rows.iter().map(|r| r.state).collect();
        out.push(self.final_state);
        out
    }

    pub fn median_runtime_s(&self) -> f64 {
        let mut times: Vec<f64> = self.rows.iter().map(|r| r.runtime_s).collect();
        times.sort_by(f64::total_cmp);
        let n = times.len();
        if n == 0 {
            return 0.0;
        }
        if n % 2 == 1 {
            times[n / 2]
        } else {
            0.5 * (times[n / 2 - 1] + times[n / 2])
        }
    }

    /// Columns: `step,t_s,x1,x2,x3,x4,u1,u2,runtime_s,status,warm,disturbed`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,t_s,x1,x2,x3,x4,u1,u2,runtime_s,status,warm,disturbed")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{:?},{},{}",
                r.step,
                r.step as f64 * SAMPLE_TIME_S,
                r.state[0],
                r.state[1],
                r.state[2],
                r.state[3],
                r.control[0],
                r.control[1],
                r.runtime_s,
                r.status,
                r.warm,
                r.disturbed
            )?;
        }
        Ok(())
    }
}

/// Shifts a horizon plan by one stage, repeating the last stage.
fn shift_stages(v: &DVector<f64>, stage_len: usize) -> DVector<f64> {
    let stages = v.len() / stage_len;
    let mut out = DVector::zeros(v.len());
    for s in 0..stages {
        let src = (s + 1).min(stages - 1);
        out.rows_mut(s * stage_len, stage_len)
            .copy_from(&v.rows(src * stage_len, stage_len));
    }
    out
}

pub fn simulate(cfg: &MpcConfig) -> MpcTrace {
    assert!(cfg.steps >= 1);
    let nn = cfg.horizon;
    let u_set = control_set();
    let (a_mat, b_mat) = (a_dt(), b_dt());
    let mut x_plant = cfg.x_start;
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut prev_plan: Option<(DVector<f64>, DVector<f64>, DVector<f64>)> = None;

    for step in 0..cfg.steps {
        let disturbed = cfg.disturb_at == Some(step);
        if disturbed {
            x_plant = cfg.x_start;
        }
        let instance = afti16(nn, &x_plant);
        let init = match (&prev_plan, cfg.warm) {
            (Some((x_prev, y_prev, z_prev)), true) => {
                let mut x0 = DVector::zeros(6 * nn);
                x0.rows_mut(0, 4 * nn)
                    .copy_from(&shift_stages(&DVector::from(x_prev.rows(0, 4 * nn)), 4));
                x0.rows_mut(4 * nn, 2 * nn)
                    .copy_from(&shift_stages(&DVector::from(x_prev.rows(4 * nn, 2 * nn)), 2));
                InitialPoint {
                    z0: instance
                        .problem
                        .set
                        .project(&shift_stages(z_prev, 2)),
                    y0: shift_stages(y_prev, 2),
                    x0,
                }
            }
            _ => random_init(&instance.problem, cfg.cold_seed.wrapping_add(step as u64)),
        };

        let t0 = Instant::now();
        let result = alm_solve(&instance.problem, &cfg.solver, &init);
        let runtime_s = t0.elapsed().as_secs_f64();

        let (control, status) = match result {
            Ok(r) => {
                let u_raw = Vector2::new(r.triple.x[4 * nn], r.triple.x[4 * nn + 1]);
                let applied = if r.status == AlmStatus::Solved {
                    let p = u_set.project(&DVector::from_row_slice(&[u_raw[0], u_raw[1]]));
                    Vector2::new(p[0], p[1])
                } else {
                    Vector2::zeros()
                };
                if r.status == AlmStatus::Solved {
                    prev_plan = Some((r.triple.x, r.triple.y, r.triple.z));
                } else {
                    prev_plan = None;
                }
                (applied, r.status)
            }
            Err(_) => {
                prev_plan = None;
                (Vector2::zeros(), AlmStatus::IterationCap)
            }
        };

        rows.push(MpcStepRow {
            step,
            state: x_plant,
            control,
            runtime_s,
            status,
            warm: cfg.warm,
            disturbed,
        });
        x_plant = a_mat * x_plant + b_mat * control;
    }

    MpcTrace {
        rows,
        final_state: x_plant,
        horizon: nn,
        warm: cfg.warm,
    }
}
