//! Parameter sweeps: fixed row-major enumeration of the grid, parallel
//! evaluation, deterministic ordered merge, and per-point failure isolation.

use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl Axis {
    /// `name:min:max:count[:log|:linear]`
    pub fn parse(spec: &str) -> anyhow::Result<Axis> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() < 4 || parts.len() > 5 {
            anyhow::bail!("axis spec `{spec}` must be name:min:max:count[:log]");
        }
        let log = match parts.get(4) {
            None | Some(&"linear") => false,
            Some(&"log") => true,
            Some(other) => anyhow::bail!("axis scale `{other}` must be linear or log"),
        };
        let axis = Axis {
            name: parts[0].to_string(),
            min: parts[1].parse()?,
            max: parts[2].parse()?,
            count: parts[3].parse()?,
            log,
        };
        if axis.count < 1 || axis.max <= axis.min {
            anyhow::bail!("axis `{spec}` needs max > min and count >= 1");
        }
        if axis.log && axis.min <= 0.0 {
            anyhow::bail!("log axis `{spec}` needs min > 0");
        }
        Ok(axis)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + (self.max - self.min) * t
                }
            })
            .collect()
    }
}

/// Row-major grid points in declaration order.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let vals: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect();
    let mut points = vec![Vec::new()];
    for axis_vals in &vals {
        let mut next = Vec::with_capacity(points.len() * axis_vals.len());
        for p in &points {
            for v in axis_vals {
                let mut q = p.clone();
                q.push(*v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Evaluate `task` over the grid in parallel; the output preserves grid
/// order regardless of the execution schedule, and per-point failures land
/// in the error column instead of aborting the sweep.
pub fn run<F>(axes: &[Axis], task: F) -> Vec<(Vec<f64>, Result<Vec<String>, String>)>
where
    F: Fn(&[f64]) -> anyhow::Result<Vec<String>> + Sync,
{
    let points = grid_points(axes);
    points
        .into_par_iter()
        .map(|p| {
            let r = task(&p).map_err(|e| format!("{e:#}").replace(',', ";"));
            (p, r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parse_and_values() {
        let a = Axis::parse("k1:0.1:0.4:4").unwrap();
        assert_eq!(a.values(), vec![0.1, 0.2, 0.30000000000000004, 0.4]);
        let l = Axis::parse("k2:1:100:3:log").unwrap();
        let v = l.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!(Axis::parse("x:1:0:4").is_err());
        assert!(Axis::parse("x:-1:2:4:log").is_err());
    }

    #[test]
    fn grid_row_major_and_parallel_order_stable() {
        let axes = vec![
            Axis::parse("a:0:1:2").unwrap(),
            Axis::parse("b:0:2:3").unwrap(),
        ];
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 1.0]);
        assert_eq!(pts[3], vec![1.0, 0.0]);
        // order independent of worker count
        let r1: Vec<_> = run(&axes, |p| Ok(vec![format!("{}", p[0] + p[1])]));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let r2 = pool.install(|| run(&axes, |p| Ok(vec![format!("{}", p[0] + p[1])])));
        for (x, y) in r1.iter().zip(r2.iter()) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn per_point_errors_do_not_abort() {
        let axes = vec![Axis::parse("x:0:3:4").unwrap()];
        let out = run(&axes, |p| {
            if p[0] == 2.0 {
                anyhow::bail!("boom, with comma")
            } else {
                Ok(vec!["ok".into()])
            }
        });
        assert!(out[2].1.is_err());
        assert!(!out[2].1.as_ref().unwrap_err().contains(','));
        assert!(out[3].1.is_ok());
    }
}
