//! Scalar abstraction shared by the spectral and dyadic-analysis layers.

use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::Arc;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustfft::{Fft, FftNum, FftPlanner};

/// Forward and inverse plans for one transform length.
#[derive(Clone)]
pub struct FftPair<T: FftNum> {
    pub forward: Arc<dyn Fft<T>>,
    pub inverse: Arc<dyn Fft<T>>,
}

/// Floating-point type usable as field samples: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate (1e-12 round trips and the like)
/// assume `f64`; `f32` fields work but only to single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Display + Debug + Sum + Send + Sync + 'static
{
    /// Cached FFT plans of length `n`.
    fn fft_plans(n: usize) -> FftPair<Self>;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

type PlanCache<T> = Lazy<Mutex<HashMap<usize, FftPair<T>>>>;

static PLANS_F64: PlanCache<f64> = Lazy::new(|| Mutex::new(HashMap::new()));
static PLANS_F32: PlanCache<f32> = Lazy::new(|| Mutex::new(HashMap::new()));

fn cached<T: FftNum>(cache: &PlanCache<T>, n: usize) -> FftPair<T> {
    let mut map = cache.lock();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

impl Real for f64 {
    fn fft_plans(n: usize) -> FftPair<Self> {
        cached(&PLANS_F64, n)
    }
}

impl Real for f32 {
    fn fft_plans(n: usize) -> FftPair<Self> {
        cached(&PLANS_F32, n)
    }
}
