use rand::seq::index::sample;

use super::{seeded_rng, Gradients, Graph, ParamId, ParamStore, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Denominator floor for the relative error, so vanishing gradients are
    /// compared on an absolute scale.
    pub floor: f64,
    /// Coordinates to sample; every coordinate is checked when the model has
    /// fewer.
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckFailure {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub failures: Vec<GradCheckFailure>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares backward gradients with central finite differences on sampled
/// parameter coordinates. `forward` must be deterministic (dropout frozen or
/// reseeded identically on every call) and return a scalar loss.
pub fn check_gradients<F>(
    store: &ParamStore,
    forward: F,
    config: &GradCheckConfig,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph) -> Result<Var, TensorError>,
{
    let total = store.num_scalars();
    if total == 0 {
        return Ok(GradCheckReport::default());
    }
    let grads = {
        let mut g = Graph::new(store);
        let loss = forward(&mut g)?;
        g.backward(loss)?
    };
    compare(store, &grads, &forward, config)
}

fn compare<F>(
    store: &ParamStore,
    grads: &Gradients,
    forward: &F,
    config: &GradCheckConfig,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph) -> Result<Var, TensorError>,
{
    let total = store.num_scalars();

    let mut rng = seeded_rng(config.seed);
    let mut coords: Vec<usize> = if total <= config.samples {
        (0..total).collect()
    } else {
        sample(&mut rng, total, config.samples).into_vec()
    };
    coords.sort_unstable();

    let offsets: Vec<(ParamId, usize)> = store
        .ids()
        .scan(0, |acc, id| {
            let start = *acc;
            *acc += store.get(id).numel();
            Some((id, start))
        })
        .collect();

    let eval = |s: &ParamStore| -> Result<f64, TensorError> {
        let mut g = Graph::new(s);
        let loss = forward(&mut g)?;
        Ok(g.value(loss).item())
    };

    let mut report = GradCheckReport::default();
    let mut probe = store.clone();
    for flat in coords {
        let (id, start) = *offsets
            .iter()
            .rev()
            .find(|(_, start)| *start <= flat)
            .expect("coordinate inside some parameter");
        let index = flat - start;
        let original = store.get(id).data()[index];

        probe.get_mut(id).data_mut()[index] = original + config.step;
        let plus = eval(&probe)?;
        probe.get_mut(id).data_mut()[index] = original - config.step;
        let minus = eval(&probe)?;
        probe.get_mut(id).data_mut()[index] = original;

        let numeric = (plus - minus) / (2.0 * config.step);
        let analytic = grads.get(id).map_or(0.0, |g| g.data()[index]);
        let denom = analytic.abs().max(numeric.abs()).max(config.floor);
        let rel_error = (analytic - numeric).abs() / denom;
        report.checked += 1;
        report.max_rel_error = report.max_rel_error.max(rel_error);
        if rel_error >= config.tolerance {
            report.failures.push(GradCheckFailure {
                param: store.name(id).to_string(),
                index,
                analytic,
                numeric,
                rel_error,
            });
        }
    }
    Ok(report)
}
