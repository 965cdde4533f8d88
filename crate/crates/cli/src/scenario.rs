//! Declarative experiment scenarios: a model, two boundary submanifolds,
//! one task, and solver settings; plus the built-in scenario presets that
//! the reproduction suite exercises.

use anyhow::{anyhow, bail, Result};
use conorbit_core::critical::{curve_intersections, nearest_param, BracketConfig};
use conorbit_core::geom::{Rect, Vec2};
use conorbit_core::models::{build_catalog_model, ModelParams, PhiProfile, SurfaceModel};
use conorbit_core::pathspace::{BoundarySpec, CurveKind};
use conorbit_core::solvers::{MinimizeConfig, OmegaAnchor, StringConfig};

use crate::config::RawConfig;

#[derive(Debug, Clone)]
pub enum Task {
    Minimize {
        k: f64,
        windings: Vec<[i64; 2]>,
        cfg: MinimizeConfig,
    },
    MountainPass {
        k: f64,
        cfg: StringConfig,
        epsilon: f64,
    },
    StruweScan {
        grid: Vec<f64>,
        cfg: StringConfig,
        epsilon: f64,
    },
    Brackets {
        interval: (f64, f64),
        cfg: BracketConfig,
        include_pair: bool,
    },
    ChainAudit {
        cfg: BracketConfig,
    },
    NoConnection {
        k: f64,
        p0: Vec2,
        p1: Vec2,
    },
    Reproduce {
        name: Option<String>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Minimize { .. } => "minimize",
            Task::MountainPass { .. } => "mountain_pass",
            Task::StruweScan { .. } => "struwe_scan",
            Task::Brackets { .. } => "brackets",
            Task::ChainAudit { .. } => "chain_audit",
            Task::NoConnection { .. } => "no_connection",
            Task::Reproduce { .. } => "reproduce",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SurfaceModel,
    pub q0: BoundarySpec,
    pub q1: BoundarySpec,
    pub task: Task,
    pub seed: u64,
}

impl Scenario {
    /// Anchor for mountain-pass tasks: the highest intersection point of the
    /// two boundaries, with its curve parameters.
    pub fn anchor(&self, epsilon: f64) -> Result<OmegaAnchor> {
        let pts = curve_intersections(self.model.chart(), &self.q0, &self.q1);
        let point = pts
            .into_iter()
            .max_by(|a, b| a.y.total_cmp(&b.y))
            .ok_or_else(|| anyhow!("boundary submanifolds do not intersect"))?;
        let s_of = |spec: &BoundarySpec| match spec {
            BoundarySpec::Point(_) => 0.0,
            BoundarySpec::Curve(c) => nearest_param(self.model.chart(), c, point),
        };
        Ok(OmegaAnchor {
            point,
            s0: s_of(&self.q0),
            s1: s_of(&self.q1),
            epsilon,
        })
    }
}

/// Names of the built-in scenario presets.
pub const PRESETS: [&str; 6] = [
    "torus_point_to_circle",
    "torus_intersecting_circles",
    "torus_two_circles",
    "torus_orthogonal_circles",
    "halfplane_horocycle",
    "halfplane_graded_rectangle",
];

/// Model and boundaries of a named preset.
pub fn preset(name: &str) -> Result<(SurfaceModel, BoundarySpec, BoundarySpec)> {
    let params = ModelParams::default();
    match name {
        "torus_point_to_circle" => Ok((
            build_catalog_model("torus_magnetic", &params)?,
            BoundarySpec::Point(Vec2::new(0.5, 0.0)),
            BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 }),
        )),
        // the circles cross at (1/2, 1/2 +- 0.3354), both intersection points
        // well clear of the bump support, so the one-form vanishes on an
        // isolation ball around either anchor
        "torus_intersecting_circles" => Ok((
            build_catalog_model("torus_magnetic", &params)?,
            BoundarySpec::Curve(CurveKind::Circle {
                center: Vec2::new(0.4, 0.5),
                radius: 0.35,
            }),
            BoundarySpec::Curve(CurveKind::Circle {
                center: Vec2::new(0.6, 0.5),
                radius: 0.35,
            }),
        )),
        "torus_two_circles" => Ok((
            build_catalog_model("torus_magnetic", &params)?,
            BoundarySpec::Curve(CurveKind::Circle {
                center: Vec2::new(0.5, 0.5),
                radius: 0.3,
            }),
            BoundarySpec::Curve(CurveKind::Circle {
                center: Vec2::new(0.0, 0.5),
                radius: 0.25,
            }),
        )),
        "torus_orthogonal_circles" => Ok((
            SurfaceModel::torus_mechanical(0.0).map_err(anyhow::Error::from)?,
            BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.25 }),
            BoundarySpec::Curve(CurveKind::VerticalCircle { x: 0.25 }),
        )),
        "halfplane_horocycle" => Ok((
            build_catalog_model("half_plane_horocycle", &params)?,
            BoundarySpec::Point(Vec2::new(0.0, 1.0)),
            BoundarySpec::Point(Vec2::new(1.0, 1.0)),
        )),
        "halfplane_graded_rectangle" => {
            let phi = PhiProfile::new(-1.2, -0.4, 0.4, 1.2)?;
            Ok((
                SurfaceModel::half_plane_graded(1.0, phi).map_err(anyhow::Error::from)?,
                BoundarySpec::Curve(CurveKind::RoundedRect {
                    x_min: -2.0,
                    x_max: 2.0,
                    y_min: 0.5,
                    y_max: 2.5,
                    corner: 0.3,
                }),
                BoundarySpec::Curve(CurveKind::Circle {
                    center: Vec2::new(0.0, 2.4),
                    radius: 0.35,
                }),
            ))
        }
        other => bail!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
    }
}

/// Recorded expectations of the graded half-plane scenario. These values are
/// scenario metadata, not estimation targets: the grid estimator is
/// torus-only and the half plane is non-compact.
pub struct GradedScenarioMetadata {
    pub cu_range: (f64, f64),
    pub k_intersection: f64,
    pub k_obstruction: f64,
}

pub fn graded_scenario_metadata() -> GradedScenarioMetadata {
    GradedScenarioMetadata {
        cu_range: (1.5, 2.0),
        k_intersection: 0.5,
        k_obstruction: 0.0,
    }
}

const ALLOWED_KEYS: [&str; 14] = [
    "name",
    "preset",
    "model.*",
    "q0.*",
    "q1.*",
    "task",
    "k",
    "k.grid",
    "winding.list",
    "solver.*",
    "string.*",
    "bracket.*",
    "no_connection.*",
    "seed",
];

fn boundary_from_config(cfg: &RawConfig, section: &str) -> Result<Option<BoundarySpec>> {
    let Some(kind) = cfg.get(&format!("{section}.kind")) else {
        return Ok(None);
    };
    let pair = |key: &str| -> Result<Vec2> {
        let v = cfg
            .f64_list(key)?
            .ok_or_else(|| anyhow!("missing key `{key}`"))?;
        if v.len() != 2 {
            bail!("key `{key}`: expected two numbers");
        }
        Ok(Vec2::new(v[0], v[1]))
    };
    let spec = match kind {
        "point" => BoundarySpec::Point(pair(&format!("{section}.at"))?),
        "circle_horizontal" => BoundarySpec::Curve(CurveKind::HorizontalCircle {
            y: cfg
                .f64(&format!("{section}.y"))?
                .ok_or_else(|| anyhow!("missing key `{section}.y`"))?,
        }),
        "circle_vertical" => BoundarySpec::Curve(CurveKind::VerticalCircle {
            x: cfg
                .f64(&format!("{section}.x"))?
                .ok_or_else(|| anyhow!("missing key `{section}.x`"))?,
        }),
        "circle" => BoundarySpec::Curve(CurveKind::Circle {
            center: pair(&format!("{section}.center"))?,
            radius: cfg
                .f64(&format!("{section}.radius"))?
                .ok_or_else(|| anyhow!("missing key `{section}.radius`"))?,
        }),
        "rounded_rect" => {
            let r = cfg
                .f64_list(&format!("{section}.rect"))?
                .ok_or_else(|| anyhow!("missing key `{section}.rect`"))?;
            if r.len() != 4 {
                bail!("key `{section}.rect`: expected x_min x_max y_min y_max");
            }
            BoundarySpec::Curve(CurveKind::RoundedRect {
                x_min: r[0],
                x_max: r[1],
                y_min: r[2],
                y_max: r[3],
                corner: cfg.f64_or(&format!("{section}.corner"), 0.1)?,
            })
        }
        other => bail!("key `{section}.kind`: unknown boundary kind `{other}`"),
    };
    Ok(Some(spec))
}

fn model_from_config(cfg: &RawConfig) -> Result<Option<SurfaceModel>> {
    let Some(id) = cfg.get("model.id") else {
        return Ok(None);
    };
    let mut params = ModelParams::default();
    if let Some(s) = cfg.f64_list("model.psi_support")? {
        if s.len() != 2 {
            bail!("key `model.psi_support`: expected two numbers");
        }
        params.psi_support = (s[0], s[1]);
    }
    params.theta_scale = cfg.f64_or("model.theta_scale", params.theta_scale)?;
    params.v_amp = cfg.f64_or("model.v_amp", params.v_amp)?;
    params.field = cfg.f64_or("model.field", params.field)?;
    if let Some(p) = cfg.f64_list("model.patch")? {
        if p.len() != 4 {
            bail!("key `model.patch`: expected x_min x_max y_min y_max");
        }
        params.patch = Rect {
            x_min: p[0],
            x_max: p[1],
            y_min: p[2],
            y_max: p[3],
        };
    }
    if let Some(g) = cfg.f64_list("model.grading")? {
        if g.len() != 4 {
            bail!("key `model.grading`: expected c e f d");
        }
        params.grading = Some(PhiProfile::new(g[0], g[1], g[2], g[3])?);
    }
    Ok(Some(build_catalog_model(id, &params)?))
}

fn minimize_config(cfg: &RawConfig, seed: u64) -> Result<MinimizeConfig> {
    let d = MinimizeConfig::default();
    Ok(MinimizeConfig {
        n_segments: cfg.usize_or("solver.segments", d.n_segments)?,
        max_iters: cfg.usize_or("solver.max_iters", d.max_iters)?,
        grad_tol: cfg.f64_or("solver.grad_tol", d.grad_tol)?,
        t_min: cfg.f64_or("solver.t_min", d.t_min)?,
        armijo_c: cfg.f64_or("solver.armijo_c", d.armijo_c)?,
        backtrack: cfg.f64_or("solver.backtrack", d.backtrack)?,
        multistart: cfg.usize_or("solver.multistart", d.multistart)?,
        seed,
    })
}

fn string_config(cfg: &RawConfig, seed: u64) -> Result<StringConfig> {
    let d = StringConfig::default();
    let mut head = d.head_search.clone();
    head.seed = seed;
    Ok(StringConfig {
        beads: cfg.usize_or("string.beads", d.beads)?,
        n_segments: cfg.usize_or("string.segments", d.n_segments)?,
        outer_iters: cfg.usize_or("string.outer_iters", d.outer_iters)?,
        saddle_tol: cfg.f64_or("string.saddle_tol", d.saddle_tol)?,
        seed,
        head_search: head,
    })
}

fn bracket_config(cfg: &RawConfig, seed: u64) -> Result<BracketConfig> {
    let d = BracketConfig::default();
    let mut probe = d.probe.clone();
    probe.seed = seed;
    Ok(BracketConfig {
        grid_n: cfg.usize_or("bracket.grid", d.grid_n)?,
        tol: cfg.f64_or("bracket.tol", d.tol)?,
        max_bisections: cfg.usize_or("bracket.max_bisections", d.max_bisections)?,
        probe,
    })
}

/// Build a scenario from a parsed config, applying preset defaults first.
pub fn scenario_from_config(cfg: &RawConfig, seed_override: Option<u64>) -> Result<Scenario> {
    cfg.check_known_keys(&ALLOWED_KEYS)?;
    let seed = seed_override.unwrap_or(cfg.u64_or("seed", 0)?);

    let preset_parts = cfg.get("preset").map(preset).transpose()?;
    let model = match model_from_config(cfg)? {
        Some(m) => m,
        None => preset_parts
            .as_ref()
            .map(|(m, _, _)| m.clone())
            .ok_or_else(|| anyhow!("missing `model.id` (or a `preset`)"))?,
    };
    let q0 = match boundary_from_config(cfg, "q0")? {
        Some(b) => b,
        None => preset_parts
            .as_ref()
            .map(|(_, b, _)| *b)
            .ok_or_else(|| anyhow!("missing `q0.kind` (or a `preset`)"))?,
    };
    let q1 = match boundary_from_config(cfg, "q1")? {
        Some(b) => b,
        None => preset_parts
            .as_ref()
            .map(|(_, _, b)| *b)
            .ok_or_else(|| anyhow!("missing `q1.kind` (or a `preset`)"))?,
    };
    q0.validate(model.chart()).map_err(anyhow::Error::from)?;
    q1.validate(model.chart()).map_err(anyhow::Error::from)?;

    let task_name = cfg.require("task")?;
    let need_k = || -> Result<f64> {
        cfg.f64("k")?
            .ok_or_else(|| anyhow!("task `{task_name}` requires key `k`"))
    };
    let task = match task_name {
        "minimize" => {
            let flat = cfg.i64_list("winding.list")?.unwrap_or_else(|| vec![0, 0]);
            if flat.len() % 2 != 0 {
                bail!("key `winding.list`: expected pairs of integers");
            }
            let windings = flat.chunks(2).map(|c| [c[0], c[1]]).collect();
            Task::Minimize {
                k: need_k()?,
                windings,
                cfg: minimize_config(cfg, seed)?,
            }
        }
        "mountain_pass" => Task::MountainPass {
            k: need_k()?,
            cfg: string_config(cfg, seed)?,
            epsilon: cfg.f64_or("string.epsilon", 0.05)?,
        },
        "struwe_scan" => {
            let grid = cfg
                .f64_list("k.grid")?
                .ok_or_else(|| anyhow!("task `struwe_scan` requires key `k.grid`"))?;
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                bail!("key `k.grid`: values must be strictly ascending");
            }
            Task::StruweScan {
                grid,
                cfg: string_config(cfg, seed)?,
                epsilon: cfg.f64_or("string.epsilon", 0.05)?,
            }
        }
        "brackets" => {
            let lo = cfg.f64_or("bracket.lo", 0.0)?;
            let hi = cfg.f64_or("bracket.hi", 1.0)?;
            Task::Brackets {
                interval: (lo, hi),
                cfg: bracket_config(cfg, seed)?,
                include_pair: true,
            }
        }
        "chain_audit" => Task::ChainAudit {
            cfg: bracket_config(cfg, seed)?,
        },
        "no_connection" => {
            let get_pair = |key: &str| -> Result<Vec2> {
                let v = cfg
                    .f64_list(key)?
                    .ok_or_else(|| anyhow!("task `no_connection` requires key `{key}`"))?;
                if v.len() != 2 {
                    bail!("key `{key}`: expected two numbers");
                }
                Ok(Vec2::new(v[0], v[1]))
            };
            Task::NoConnection {
                k: need_k()?,
                p0: get_pair("no_connection.p0")?,
                p1: get_pair("no_connection.p1")?,
            }
        }
        "reproduce" => Task::Reproduce {
            name: cfg.get("name").map(str::to_string),
        },
        other => bail!("key `task`: unknown task `{other}`"),
    };

    let name = cfg
        .get("name")
        .map(str::to_string)
        .or_else(|| cfg.get("preset").map(str::to_string))
        .unwrap_or_else(|| task.name().to_string());
    Ok(Scenario {
        name,
        model,
        q0,
        q1,
        task,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESETS {
            let (model, q0, q1) = preset(name).unwrap();
            q0.validate(model.chart()).unwrap();
            q1.validate(model.chart()).unwrap();
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn config_with_preset_and_task() {
        let text = "preset = torus_point_to_circle\ntask = minimize\nk = 0.75\nwinding.list = 0 -1 0 0 0 1\nsolver.segments = 64\n";
        let cfg = RawConfig::parse(text).unwrap();
        let sc = scenario_from_config(&cfg, None).unwrap();
        match sc.task {
            Task::Minimize { k, ref windings, .. } => {
                assert_eq!(k, 0.75);
                assert_eq!(windings.len(), 3);
            }
            _ => panic!("wrong task"),
        }
    }

    #[test]
    fn schema_violations_are_reported() {
        let cfg = RawConfig::parse("task = minimize\nk = 0.5\nbogus.key = 1\n").unwrap();
        let err = scenario_from_config(&cfg, None).unwrap_err();
        assert!(err.to_string().contains("bogus.key"));

        let cfg = RawConfig::parse("preset = torus_point_to_circle\ntask = minimize\n").unwrap();
        let err = scenario_from_config(&cfg, None).unwrap_err();
        assert!(err.to_string().contains('k'));

        let cfg =
            RawConfig::parse("preset = torus_point_to_circle\ntask = struwe_scan\nk.grid = 0.3 0.2\n")
                .unwrap();
        assert!(scenario_from_config(&cfg, None).is_err());
    }

    #[test]
    fn intersecting_circles_anchor() {
        let (model, q0, q1) = preset("torus_intersecting_circles").unwrap();
        let sc = Scenario {
            name: "t".into(),
            model,
            q0,
            q1,
            task: Task::Reproduce { name: None },
            seed: 0,
        };
        let anchor = sc.anchor(0.05).unwrap();
        assert!((anchor.point.x - 0.5).abs() < 1e-6);
        assert!((anchor.point.y - (0.5 + 0.1125_f64.sqrt())).abs() < 1e-6);
    }
}
