use num_complex::Complex64;

/// A one-dimensional series over snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Series {
    pub fn len(&self) -> usize {
        match self {
            Series::Real(v) => v.len(),
            Series::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Series::Real(_))
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Series::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Series::Complex(v) => v.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Series::Real(v) => Some(v),
            Series::Complex(_) => None,
        }
    }
}

impl From<Vec<f64>> for Series {
    fn from(v: Vec<f64>) -> Self {
        Series::Real(v)
    }
}

impl From<Vec<Complex64>> for Series {
    fn from(v: Vec<Complex64>) -> Self {
        Series::Complex(v)
    }
}
