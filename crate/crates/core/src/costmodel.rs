//! UAV survey mission cost model.
//!
//! Given a mission area and ground sampling distance, the model derives the
//! daily coverage, the number of pilot-days and pilots, and five cost
//! categories: fixed (travel, training, certification, registration), human
//! (wages, benefits, lodging, car), drone amortization, fuel, and storage.
//!
//! `day_tot` counts pilot-days of engagement, weekends and weather days
//! included. Daily coverage scales linearly with GSD.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::round6;

/// Every unit price and operational parameter of the cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostAssumptions {
    /// Part 107 remote pilot certificate, $/pilot.
    pub part107_fee: f64,
    /// Exam preparation course, $/pilot.
    pub training: f64,
    /// Drone registration, $/drone/year.
    pub registration: f64,
    /// $/month.
    pub car_rental: f64,
    /// $/month.
    pub car_insurance: f64,
    /// $/gallon.
    pub fuel_price: f64,
    /// $/pilot.
    pub airfare: f64,
    /// $/day.
    pub translator: f64,
    /// $/hour.
    pub wage: f64,
    /// $/hour.
    pub benefits: f64,
    pub paid_hours_per_day: f64,
    /// $/night.
    pub hotel: f64,
    pub drone_price: f64,
    pub camera_price: f64,
    /// Enough batteries for one full flying day, $/drone.
    pub battery_bundle: f64,
    /// $ per storage unit.
    pub storage_price: f64,
    pub storage_unit_bytes: f64,
    /// Airframe plus batteries lifetime in flight hours.
    pub drone_lifetime_h: f64,
    pub flight_hours_per_day: f64,
    pub workdays_per_week: f64,
    /// Probability that a day is flyable.
    pub sunny_fraction: f64,
    /// Longest engagement per pilot, days.
    pub max_mission_days: f64,
    /// Drone-to-controller range, km.
    pub comm_radius_km: f64,
    pub km_per_gallon: f64,
    /// Area covered per flight hour at `ref_gsd_m`, km².
    pub coverage_per_flight_hour_km2_at_ref: f64,
    pub ref_gsd_m: f64,
    /// Stored image channels.
    pub channels: f64,
    pub bytes_per_channel: f64,
    /// Multiply human cost by the pilot count as well (treats `day_tot`
    /// as calendar days per pilot rather than pilot-days).
    pub literal_human_formula: bool,
}

impl Default for CostAssumptions {
    fn default() -> Self {
        Self {
            part107_fee: 150.0,
            training: 300.0,
            registration: 5.0,
            car_rental: 1700.0,
            car_insurance: 400.0,
            fuel_price: 3.0,
            airfare: 2000.0,
            translator: 0.0,
            wage: 40.0,
            benefits: 20.0,
            paid_hours_per_day: 8.0,
            hotel: 125.0,
            drone_price: 27000.0,
            camera_price: 0.0,
            battery_bundle: 3000.0,
            storage_price: 130.0,
            storage_unit_bytes: 5e12,
            drone_lifetime_h: 800.0,
            flight_hours_per_day: 6.0,
            workdays_per_week: 5.0,
            sunny_fraction: 0.8,
            max_mission_days: 90.0,
            comm_radius_km: 7.0,
            km_per_gallon: 40.0,
            coverage_per_flight_hour_km2_at_ref: 0.293,
            ref_gsd_m: 0.03,
            channels: 4.0,
            bytes_per_channel: 1.0,
            literal_human_formula: false,
        }
    }
}

impl CostAssumptions {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("part107_fee", self.part107_fee),
            ("training", self.training),
            ("registration", self.registration),
            ("car_rental", self.car_rental),
            ("car_insurance", self.car_insurance),
            ("fuel_price", self.fuel_price),
            ("airfare", self.airfare),
            ("translator", self.translator),
            ("wage", self.wage),
            ("benefits", self.benefits),
            ("paid_hours_per_day", self.paid_hours_per_day),
            ("hotel", self.hotel),
            ("drone_price", self.drone_price),
            ("camera_price", self.camera_price),
            ("battery_bundle", self.battery_bundle),
            ("storage_price", self.storage_price),
            ("flight_hours_per_day", self.flight_hours_per_day),
            ("workdays_per_week", self.workdays_per_week),
            (
                "coverage_per_flight_hour_km2_at_ref",
                self.coverage_per_flight_hour_km2_at_ref,
            ),
            ("channels", self.channels),
            ("bytes_per_channel", self.bytes_per_channel),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::argument(format!("{name} must be >= 0, got {v}")));
            }
        }
        let positive = [
            ("storage_unit_bytes", self.storage_unit_bytes),
            ("drone_lifetime_h", self.drone_lifetime_h),
            ("max_mission_days", self.max_mission_days),
            ("comm_radius_km", self.comm_radius_km),
            ("km_per_gallon", self.km_per_gallon),
            ("ref_gsd_m", self.ref_gsd_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::argument(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.sunny_fraction > 0.0 && self.sunny_fraction <= 1.0) {
            return Err(Error::argument(format!(
                "sunny_fraction must be in (0, 1], got {}",
                self.sunny_fraction
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)
            .map_err(|e| Error::format(format!("cost assumptions: {e}")))?;
        a.validate()?;
        Ok(a)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Per pilot-day cost of labor, lodging, car and translator.
    pub fn daily_rate(&self) -> f64 {
        (self.wage + self.benefits) * self.paid_hours_per_day
            + self.hotel
            + self.car_rental / 30.0
            + self.car_insurance / 30.0
            + self.translator
    }

    /// Drone bundle cost per flight hour.
    pub fn drone_cost_per_flight_hour(&self) -> f64 {
        (self.drone_price + self.camera_price + self.battery_bundle) / self.drone_lifetime_h
    }

    /// Flight hours per calendar pilot-day once weekends and weather are
    /// accounted for.
    pub fn flight_hours_per_pilot_day(&self) -> f64 {
        self.workdays_per_week / 7.0 * self.sunny_fraction * self.flight_hours_per_day
    }

    pub fn fixed_per_pilot(&self) -> f64 {
        self.airfare + self.training + self.part107_fee + self.registration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub area_km2: f64,
    pub gsd_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_label: Option<String>,
}

impl MissionSpec {
    pub fn new(area_km2: f64, gsd_m: f64) -> Result<Self> {
        let spec = Self {
            area_km2,
            gsd_m,
            region_label: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_km2.is_finite() && self.area_km2 > 0.0) {
            return Err(Error::argument(format!(
                "area must be > 0 km², got {}",
                self.area_km2
            )));
        }
        if !(self.gsd_m.is_finite() && self.gsd_m > 0.0) {
            return Err(Error::argument(format!(
                "gsd must be > 0 m, got {}",
                self.gsd_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub area_km2: f64,
    pub gsd_m: f64,
    pub day_tot: f64,
    pub n_pilots: u64,
    pub fixed: f64,
    pub human: f64,
    pub drone: f64,
    pub fuel: f64,
    pub storage: f64,
    pub total: f64,
    pub unit_cost: f64,
    pub hotel_share: f64,
}

impl CostBreakdown {
    /// Copy with every real field rounded to 6 decimals for output files.
    pub fn rounded(&self) -> Self {
        Self {
            area_km2: round6(self.area_km2),
            gsd_m: round6(self.gsd_m),
            day_tot: round6(self.day_tot),
            n_pilots: self.n_pilots,
            fixed: round6(self.fixed),
            human: round6(self.human),
            drone: round6(self.drone),
            fuel: round6(self.fuel),
            storage: round6(self.storage),
            total: round6(self.total),
            unit_cost: round6(self.unit_cost),
            hotel_share: round6(self.hotel_share),
        }
    }
}

/// Area mapped per calendar flying day, km²/day.
pub fn area_per_day(gsd_m: f64, a: &CostAssumptions) -> f64 {
    a.coverage_per_flight_hour_km2_at_ref * (gsd_m / a.ref_gsd_m) * a.flight_hours_per_day
}

/// Total pilot-days `area / area_per_day * 7/5 / sunny_fraction`.
///
/// The 7/5 factor pays weekends and is applied regardless of
/// `workdays_per_week`.
pub fn mission_days(spec: &MissionSpec, a: &CostAssumptions) -> Result<f64> {
    let per_day = area_per_day(spec.gsd_m, a);
    if per_day.is_nan() || per_day <= 0.0 {
        return Err(Error::argument(
            "daily coverage is zero; mission never finishes",
        ));
    }
    Ok(spec.area_km2 / per_day * (7.0 / 5.0) / a.sunny_fraction)
}

/// `ceil(day_tot / max_mission_days)`, at least one pilot for any work.
pub fn pilots_required(day_tot: f64, a: &CostAssumptions) -> u64 {
    if day_tot <= 0.0 {
        return 0;
    }
    ((day_tot / a.max_mission_days).ceil() as u64).max(1)
}

pub fn fixed_cost(n_pilots: u64, a: &CostAssumptions) -> f64 {
    a.fixed_per_pilot() * n_pilots as f64
}

/// Labor, lodging, car and translator over `day_tot` pilot-days.
pub fn human_cost(day_tot: f64, a: &CostAssumptions) -> f64 {
    let base = a.daily_rate() * day_tot;
    if a.literal_human_formula {
        base * pilots_required(day_tot, a) as f64
    } else {
        base
    }
}

/// Drone bundle amortized over hours actually flown.
pub fn drone_cost(day_tot: f64, a: &CostAssumptions) -> f64 {
    a.drone_cost_per_flight_hour() * day_tot * a.flight_hours_per_pilot_day()
}

/// Driving one pass per strip twice the controller range wide.
pub fn fuel_cost(spec: &MissionSpec, a: &CostAssumptions) -> f64 {
    a.fuel_price * (spec.area_km2 / (2.0 * a.comm_radius_km)) / a.km_per_gallon
}

/// Whole storage units needed for every channel of every pixel.
pub fn storage_cost(spec: &MissionSpec, a: &CostAssumptions) -> f64 {
    (storage_bytes(spec, a) / a.storage_unit_bytes).ceil() * a.storage_price
}

pub fn storage_bytes(spec: &MissionSpec, a: &CostAssumptions) -> f64 {
    a.channels * a.bytes_per_channel * spec.area_km2 * 1e6 / (spec.gsd_m * spec.gsd_m)
}

pub fn estimate(spec: &MissionSpec, a: &CostAssumptions) -> Result<CostBreakdown> {
    spec.validate()?;
    a.validate()?;
    let day_tot = mission_days(spec, a)?;
    let n_pilots = pilots_required(day_tot, a);
    let fixed = fixed_cost(n_pilots, a);
    let human = human_cost(day_tot, a);
    let drone = drone_cost(day_tot, a);
    let fuel = fuel_cost(spec, a);
    let storage = storage_cost(spec, a);
    let total = fixed + human + drone + fuel + storage;
    let lodging_days = if a.literal_human_formula {
        day_tot * n_pilots as f64
    } else {
        day_tot
    };
    Ok(CostBreakdown {
        area_km2: spec.area_km2,
        gsd_m: spec.gsd_m,
        day_tot,
        n_pilots,
        fixed,
        human,
        drone,
        fuel,
        storage,
        total,
        unit_cost: total / spec.area_km2,
        hotel_share: if total > 0.0 {
            a.hotel * lodging_days / total
        } else {
            0.0
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub area_km2: f64,
    pub total_usd: f64,
    pub unit_cost_usd_per_km2: f64,
}

/// Total and unit cost at each area. Unit cost falls with area as fixed
/// costs spread out, apart from small steps where an extra pilot or storage
/// unit is added.
pub fn unit_cost_curve(gsd_m: f64, areas: &[f64], a: &CostAssumptions) -> Result<Vec<CurvePoint>> {
    areas
        .iter()
        .map(|&area| {
            let b = estimate(&MissionSpec::new(area, gsd_m)?, a)?;
            Ok(CurvePoint {
                area_km2: area,
                total_usd: b.total,
                unit_cost_usd_per_km2: b.unit_cost,
            })
        })
        .collect()
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("area_km2,total_usd,unit_cost_usd_per_km2\n");
    for p in points {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6}\n",
            p.area_km2, p.total_usd, p.unit_cost_usd_per_km2
        ));
    }
    out
}

/// A competing imagery source with a quoted price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Platform {
    pub name: String,
    pub gsd_m: f64,
    pub unit_cost_usd_km2: f64,
}

impl Platform {
    pub fn load_list(path: impl AsRef<Path>) -> Result<Vec<Platform>> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("platform list: {e}")))
    }
}

/// Lower and upper bounds of the break-even search, km².
pub const BREAK_EVEN_MIN_KM2: f64 = 1e-2;
pub const BREAK_EVEN_MAX_KM2: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformComparison {
    pub name: String,
    pub gsd_m: f64,
    pub unit_cost_usd_km2: f64,
    /// Smallest area at which the UAV is no more expensive per km², or
    /// `None` if that never happens within the search bounds.
    pub break_even_km2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub uav_gsd_m: f64,
    pub uav_area_km2: f64,
    pub uav_unit_cost_usd_km2: f64,
    pub platforms: Vec<PlatformComparison>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,gsd_m,unit_cost_usd_km2,break_even_km2\n");
        out.push_str(&format!(
            "uav,{:.6},{:.6},\n",
            self.uav_gsd_m, self.uav_unit_cost_usd_km2
        ));
        for p in &self.platforms {
            let be = p
                .break_even_km2
                .map_or("never".to_string(), |a| format!("{a:.6}"));
            out.push_str(&format!(
                "{},{:.6},{:.6},{be}\n",
                csv_field(&p.name),
                p.gsd_m,
                p.unit_cost_usd_km2
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn compare_platforms(
    spec: &MissionSpec,
    a: &CostAssumptions,
    platforms: &[Platform],
) -> Result<Comparison> {
    if platforms.is_empty() {
        return Err(Error::argument("platform list is empty"));
    }
    let uav = estimate(spec, a)?;
    let platforms = platforms
        .iter()
        .map(|p| {
            if !(p.unit_cost_usd_km2.is_finite() && p.unit_cost_usd_km2 > 0.0) {
                return Err(Error::argument(format!(
                    "platform {}: unit cost must be > 0",
                    p.name
                )));
            }
            Ok(PlatformComparison {
                name: p.name.clone(),
                gsd_m: p.gsd_m,
                unit_cost_usd_km2: p.unit_cost_usd_km2,
                break_even_km2: break_even_area(spec.gsd_m, p.unit_cost_usd_km2, a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        uav_gsd_m: spec.gsd_m,
        uav_area_km2: spec.area_km2,
        uav_unit_cost_usd_km2: uav.unit_cost,
        platforms,
    })
}

/// Bisection in log-area for the smallest area whose UAV unit cost is at
/// most `unit_cost`.
pub fn break_even_area(gsd_m: f64, unit_cost: f64, a: &CostAssumptions) -> Result<Option<f64>> {
    let uav =
        |area: f64| -> Result<f64> { Ok(estimate(&MissionSpec::new(area, gsd_m)?, a)?.unit_cost) };
    if uav(BREAK_EVEN_MIN_KM2)? <= unit_cost {
        return Ok(Some(BREAK_EVEN_MIN_KM2));
    }
    if uav(BREAK_EVEN_MAX_KM2)? > unit_cost {
        return Ok(None);
    }
    let (mut lo, mut hi) = (BREAK_EVEN_MIN_KM2.ln(), BREAK_EVEN_MAX_KM2.ln());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if uav(mid.exp())? <= unit_cost {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi.exp()))
}
