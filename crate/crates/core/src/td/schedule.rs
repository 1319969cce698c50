use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `beta_t = beta0`.
    Constant,
    /// `beta_t = beta0 / (t - hold + 1)^s` after the hold window.
    Poly,
    /// `beta_t = beta0 / (t - hold + offset)^s` after the hold window.
    OffsetPoly,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Poly => "poly",
            ScheduleKind::OffsetPoly => "offset_poly",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(ScheduleKind::Constant),
            "poly" => Some(ScheduleKind::Poly),
            "offset_poly" | "offset-poly" => Some(ScheduleKind::OffsetPoly),
            _ => None,
        }
    }
}

/// Step-size schedule for the weight iterate; the average-reward iterate
/// uses `c_alpha * beta_t`.
///
/// During the first `hold` iterations the schedule returns its value at
/// `t = 0`; afterwards the decay clock restarts, so `beta_t` is continuous
/// at the end of the hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub beta0: f64,
    pub s: f64,
    pub hold: usize,
    pub offset: usize,
    pub c_alpha: f64,
}

impl StepSchedule {
    pub fn constant(beta0: f64, c_alpha: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::Constant,
            beta0,
            s: 1.0,
            hold: 0,
            offset: 1,
            c_alpha,
        }
    }

    pub fn poly(beta0: f64, s: f64, hold: usize, c_alpha: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::Poly,
            beta0,
            s,
            hold,
            offset: 1,
            c_alpha,
        }
    }

    pub fn offset_poly(beta0: f64, s: f64, offset: usize, hold: usize, c_alpha: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::OffsetPoly,
            beta0,
            s,
            hold,
            offset,
            c_alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.beta0 > 0.0) || !self.beta0.is_finite() {
            problems.push(format!("beta0 = {} must be positive", self.beta0));
        }
        if !(self.c_alpha > 0.0) || !self.c_alpha.is_finite() {
            problems.push(format!("c_alpha = {} must be positive", self.c_alpha));
        }
        if self.kind != ScheduleKind::Constant && !(self.s > 0.0 && self.s <= 1.0) {
            problems.push(format!("exponent s = {} outside (0, 1]", self.s));
        }
        if self.kind == ScheduleKind::OffsetPoly && self.offset == 0 {
            problems.push("offset must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Step size for the weight iterate at iteration `t`.
    pub fn beta_at(&self, t: usize) -> f64 {
        let elapsed = t.saturating_sub(self.hold) as f64;
        match self.kind {
            ScheduleKind::Constant => self.beta0,
            ScheduleKind::Poly => self.beta0 / (elapsed + 1.0).powf(self.s),
            ScheduleKind::OffsetPoly => self.beta0 / (elapsed + self.offset as f64).powf(self.s),
        }
    }

    pub fn alpha_at(&self, t: usize) -> f64 {
        self.c_alpha * self.beta_at(t)
    }
}
