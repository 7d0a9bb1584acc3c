use super::StatsError;

/// Two equally long vectors of finite reals, at least three points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 3 {
            return Err(StatsError::TooFewPoints { n: x.len(), min: 3 });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(PairedSample { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson product-moment correlation.
pub fn pearson(s: &PairedSample) -> Result<f64, StatsError> {
    pearson_slices(&s.x, &s.y)
}

/// 1-based ranks; tied values share the average of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(s: &PairedSample) -> Result<f64, StatsError> {
    pearson_slices(&ranks(&s.x), &ranks(&s.y))
}
