use super::{PlantModel, PortSpec};

/// Output equals input; useful for exercising the search on a known box.
#[derive(Debug, Clone)]
pub struct Passthrough {
    ports: PortSpec,
}

impl Default for Passthrough {
    fn default() -> Self {
        Self { ports: PortSpec::new(["u"], ["x"]).expect("static ports") }
    }
}

impl PlantModel for Passthrough {
    fn name(&self) -> &str {
        "passthrough"
    }
    fn ports(&self) -> &PortSpec {
        &self.ports
    }
    fn horizon(&self) -> f64 {
        10.0
    }
    fn initial_state(&self) -> Vec<f64> {
        Vec::new()
    }
    fn derivative(&self, _: &[f64], _: usize, _: &[f64], _: &mut [f64]) {}
    fn outputs(&self, _: &[f64], _: usize, inputs: &[f64], out: &mut [f64]) {
        out[0] = inputs[0];
    }
}

/// Five-car platoon. Car 1 is driven by throttle and brake in `[0, 1]`;
/// cars 2..5 track a 10 m gap to the car ahead with a spring-damper law.
///
/// State layout: positions `y1..y5`, then velocities `v1..v5`.
#[derive(Debug, Clone)]
pub struct ChasingCars {
    ports: PortSpec,
    pub throttle_gain: f64,
    pub brake_gain: f64,
    pub drag: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub spacing: f64,
}

impl Default for ChasingCars {
    fn default() -> Self {
        Self {
            ports: PortSpec::new(["throttle", "brake"], ["y1", "y2", "y3", "y4", "y5"]).expect("static ports"),
            throttle_gain: 5.0,
            brake_gain: 6.0,
            drag: 0.1,
            stiffness: 0.2,
            damping: 0.3,
            spacing: 10.0,
        }
    }
}

impl PlantModel for ChasingCars {
    fn name(&self) -> &str {
        "chasing_cars"
    }
    fn ports(&self) -> &PortSpec {
        &self.ports
    }
    fn horizon(&self) -> f64 {
        100.0
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![40.0, 30.0, 20.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    }
    fn derivative(&self, s: &[f64], _: usize, u: &[f64], out: &mut [f64]) {
        let (y, v) = s.split_at(5);
        out[..5].copy_from_slice(v);
        out[5] = self.throttle_gain * u[0] - self.brake_gain * u[1] - self.drag * v[0];
        for k in 1..5 {
            out[5 + k] =
                self.stiffness * ((y[k - 1] - y[k]) - self.spacing) - self.damping * v[k] + self.damping * v[k - 1];
        }
    }
    fn outputs(&self, s: &[f64], _: usize, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&s[..5]);
    }
}

/// Four-gear automatic transmission with hysteretic shift points.
///
/// Throttle is in percent (`[0, 100]`), brake in `[0, 325]`. Speed is in mph and
/// never drops below zero. Gear is reported as `1..=4`.
#[derive(Debug, Clone)]
pub struct AutoTransmissionLite {
    ports: PortSpec,
    pub gear_ratio: [f64; 4],
    pub torque_ratio: [f64; 4],
    pub upshift: [f64; 3],
    pub downshift: [f64; 3],
}

impl Default for AutoTransmissionLite {
    fn default() -> Self {
        Self {
            ports: PortSpec::new(["Throttle", "Brake"], ["Speed", "RPM", "Gear"]).expect("static ports"),
            gear_ratio: [4.0, 2.5, 1.6, 1.0],
            torque_ratio: [25.0, 17.0, 12.0, 9.0],
            upshift: [15.0, 30.0, 50.0],
            downshift: [12.0, 25.0, 45.0],
        }
    }
}

impl AutoTransmissionLite {
    fn fractions(u: &[f64]) -> (f64, f64) {
        (u[0] / 100.0, u[1] / 325.0)
    }
}

impl PlantModel for AutoTransmissionLite {
    fn name(&self) -> &str {
        "at_lite"
    }
    fn ports(&self) -> &PortSpec {
        &self.ports
    }
    fn horizon(&self) -> f64 {
        50.0
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn derivative(&self, s: &[f64], gear: usize, u: &[f64], out: &mut [f64]) {
        let (throttle, brake) = Self::fractions(u);
        out[0] = 0.9 * throttle * self.torque_ratio[gear] - 0.35 * brake * 3.25 - 0.02 * s[0];
    }
    fn outputs(&self, s: &[f64], gear: usize, u: &[f64], out: &mut [f64]) {
        let (throttle, _) = Self::fractions(u);
        out[0] = s[0];
        out[1] = s[0] * self.gear_ratio[gear] * 40.0 + 600.0 * throttle;
        out[2] = (gear + 1) as f64;
    }
    fn next_mode(&self, s: &[f64], gear: usize, _: &[f64]) -> usize {
        let speed = s[0];
        if gear < 3 && speed > self.upshift[gear] {
            gear + 1
        } else if gear > 0 && speed < self.downshift[gear - 1] {
            gear - 1
        } else {
            gear
        }
    }
    fn project(&self, s: &mut [f64]) {
        s[0] = s[0].max(0.0);
    }
}
