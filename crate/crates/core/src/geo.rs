//! Geographic hierarchy and period calendar.
//!
//! Countries nest in regions, regions in super-regions, super-regions in the
//! world. Years are grouped into fixed-length periods indexed 1..=P, with a
//! designated reference period `p0`; estimation walks outward from `p0`, so
//! every non-reference period has a unique neighbor one step closer to it.

use crate::error::{Error, Result};

/// Fixed-length period grid over a span of calendar years.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCalendar {
    first_year: i32,
    last_year: i32,
    period_length: u32,
    /// 1-based index of the reference period.
    p0: usize,
}

impl PeriodCalendar {
    pub fn new(
        first_year: i32,
        last_year: i32,
        period_length: u32,
        reference_start_year: i32,
    ) -> Result<Self> {
        if period_length == 0 {
            return Err(Error::InputDomain("period length must be positive".into()));
        }
        if last_year < first_year {
            return Err(Error::InputDomain(format!(
                "calendar ends ({last_year}) before it starts ({first_year})"
            )));
        }
        let span = (last_year - first_year + 1) as u32;
        if span % period_length != 0 {
            return Err(Error::Structural(format!(
                "year span {span} is not a whole number of {period_length}-year periods"
            )));
        }
        if reference_start_year < first_year
            || reference_start_year > last_year
            || (reference_start_year - first_year) as u32 % period_length != 0
        {
            return Err(Error::Structural(format!(
                "reference start year {reference_start_year} is not a period start within \
                 {first_year}..={last_year}"
            )));
        }
        let p0 = 1 + ((reference_start_year - first_year) as u32 / period_length) as usize;
        Ok(Self {
            first_year,
            last_year,
            period_length,
            p0,
        })
    }

    /// Default grid: 1990-2019 in 5-year periods, reference period 2000-2004.
    pub fn default_grid() -> Self {
        Self::new(1990, 2019, 5, 2000).expect("default calendar is valid")
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.last_year
    }

    pub fn period_length(&self) -> u32 {
        self.period_length
    }

    pub fn n_years(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    pub fn n_periods(&self) -> usize {
        self.n_years() / self.period_length as usize
    }

    /// 1-based index of the reference period.
    pub fn reference_period(&self) -> usize {
        self.p0
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first_year..=self.last_year
    }

    /// 1-based period containing `year`.
    pub fn period_of_year(&self, year: i32) -> Result<usize> {
        if year < self.first_year || year > self.last_year {
            return Err(Error::Referential(format!(
                "year {year} outside calendar {}..={}",
                self.first_year, self.last_year
            )));
        }
        Ok(1 + ((year - self.first_year) as u32 / self.period_length) as usize)
    }

    /// Inclusive year range of 1-based period `p`.
    pub fn years_of_period(&self, p: usize) -> Result<std::ops::RangeInclusive<i32>> {
        self.check_period(p)?;
        let start = self.first_year + ((p - 1) as u32 * self.period_length) as i32;
        Ok(start..=start + self.period_length as i32 - 1)
    }

    pub fn period_start_year(&self, p: usize) -> Result<i32> {
        Ok(*self.years_of_period(p)?.start())
    }

    pub fn check_period(&self, p: usize) -> Result<()> {
        if p == 0 || p > self.n_periods() {
            return Err(Error::Referential(format!(
                "period {p} outside 1..={}",
                self.n_periods()
            )));
        }
        Ok(())
    }

    /// The unique period one step closer to the reference period.
    /// The reference period itself has no neighbor.
    pub fn neighbor_period(&self, p: usize) -> Result<usize> {
        self.check_period(p)?;
        match p.cmp(&self.p0) {
            std::cmp::Ordering::Greater => Ok(p - 1),
            std::cmp::Ordering::Less => Ok(p + 1),
            std::cmp::Ordering::Equal => Err(Error::InputDomain(format!(
                "reference period {p} has no neighbor"
            ))),
        }
    }

    /// Periods in an order where each period's neighbor precedes it:
    /// the reference period first, then outward (later side, then earlier).
    pub fn periods_outward(&self) -> Vec<usize> {
        let mut order = vec![self.p0];
        order.extend(self.p0 + 1..=self.n_periods());
        order.extend((1..self.p0).rev());
        order
    }

    /// 0-based year offset from the first calendar year.
    pub fn year_offset(&self, year: i32) -> Result<usize> {
        self.period_of_year(year)?;
        Ok((year - self.first_year) as usize)
    }
}

/// One country row of the hierarchy.
#[derive(Debug, Clone)]
pub struct CountryDef {
    pub id: u32,
    pub name: String,
    pub region_id: u32,
    pub super_region_id: u32,
}

/// Validated three-level nesting with dense 0-based indices at every level.
/// Dense indices are assigned in ascending order of the external ids, so a
/// given set of rows always produces the same layout.
#[derive(Debug, Clone)]
pub struct GeoHierarchy {
    country_ids: Vec<u32>,
    country_names: Vec<String>,
    region_of_country: Vec<usize>,
    region_ids: Vec<u32>,
    super_of_region: Vec<usize>,
    super_ids: Vec<u32>,
    countries_of_region: Vec<Vec<usize>>,
    regions_of_super: Vec<Vec<usize>>,
}

impl GeoHierarchy {
    pub fn new(mut rows: Vec<CountryDef>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Structural("hierarchy has no countries".into()));
        }
        rows.sort_by_key(|r| r.id);
        for pair in rows.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Structural(format!(
                    "duplicate country id {}",
                    pair[0].id
                )));
            }
        }

        let mut region_ids: Vec<u32> = rows.iter().map(|r| r.region_id).collect();
        region_ids.sort_unstable();
        region_ids.dedup();
        let mut super_ids: Vec<u32> = rows.iter().map(|r| r.super_region_id).collect();
        super_ids.sort_unstable();
        super_ids.dedup();

        let region_index = |id: u32| region_ids.binary_search(&id).unwrap();
        let super_index = |id: u32| super_ids.binary_search(&id).unwrap();

        let mut super_of_region = vec![usize::MAX; region_ids.len()];
        for row in &rows {
            let r = region_index(row.region_id);
            let q = super_index(row.super_region_id);
            if super_of_region[r] == usize::MAX {
                super_of_region[r] = q;
            } else if super_of_region[r] != q {
                return Err(Error::Structural(format!(
                    "region {} assigned to more than one super-region",
                    row.region_id
                )));
            }
        }

        let region_of_country: Vec<usize> =
            rows.iter().map(|r| region_index(r.region_id)).collect();
        let mut countries_of_region = vec![Vec::new(); region_ids.len()];
        for (c, &r) in region_of_country.iter().enumerate() {
            countries_of_region[r].push(c);
        }
        let mut regions_of_super = vec![Vec::new(); super_ids.len()];
        for (r, &q) in super_of_region.iter().enumerate() {
            regions_of_super[q].push(r);
        }

        Ok(Self {
            country_ids: rows.iter().map(|r| r.id).collect(),
            country_names: rows.iter().map(|r| r.name.clone()).collect(),
            region_of_country,
            region_ids,
            super_of_region,
            super_ids,
            countries_of_region,
            regions_of_super,
        })
    }

    pub fn n_countries(&self) -> usize {
        self.country_ids.len()
    }

    pub fn n_regions(&self) -> usize {
        self.region_ids.len()
    }

    pub fn n_super_regions(&self) -> usize {
        self.super_ids.len()
    }

    pub fn region_of_country(&self, c: usize) -> usize {
        self.region_of_country[c]
    }

    pub fn super_of_region(&self, r: usize) -> usize {
        self.super_of_region[r]
    }

    pub fn super_of_country(&self, c: usize) -> usize {
        self.super_of_region[self.region_of_country[c]]
    }

    pub fn countries_of_region(&self, r: usize) -> &[usize] {
        &self.countries_of_region[r]
    }

    pub fn regions_of_super(&self, q: usize) -> &[usize] {
        &self.regions_of_super[q]
    }

    pub fn countries_of_super(&self, q: usize) -> Vec<usize> {
        self.regions_of_super[q]
            .iter()
            .flat_map(|&r| self.countries_of_region[r].iter().copied())
            .collect()
    }

    pub fn country_id(&self, c: usize) -> u32 {
        self.country_ids[c]
    }

    pub fn country_name(&self, c: usize) -> &str {
        &self.country_names[c]
    }

    pub fn region_id(&self, r: usize) -> u32 {
        self.region_ids[r]
    }

    pub fn super_region_id(&self, q: usize) -> u32 {
        self.super_ids[q]
    }

    /// Dense index of an external country id.
    pub fn country_index(&self, id: u32) -> Result<usize> {
        self.country_ids
            .binary_search(&id)
            .map_err(|_| Error::Referential(format!("unknown country id {id}")))
    }

    pub fn region_index(&self, id: u32) -> Result<usize> {
        self.region_ids
            .binary_search(&id)
            .map_err(|_| Error::Referential(format!("unknown region id {id}")))
    }

    pub fn super_region_index(&self, id: u32) -> Result<usize> {
        self.super_ids
            .binary_search(&id)
            .map_err(|_| Error::Referential(format!("unknown super-region id {id}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cal() -> PeriodCalendar {
        PeriodCalendar::default_grid()
    }

    #[test]
    fn default_grid_shape() {
        let c = cal();
        assert_eq!(c.n_periods(), 6);
        assert_eq!(c.n_years(), 30);
        assert_eq!(c.reference_period(), 3);
    }

    #[test]
    fn period_of_year_known_values() {
        let c = cal();
        assert_eq!(c.period_of_year(1990).unwrap(), 1);
        assert_eq!(c.period_of_year(1994).unwrap(), 1);
        assert_eq!(c.period_of_year(1995).unwrap(), 2);
        assert_eq!(c.period_of_year(2004).unwrap(), 3);
        assert_eq!(c.period_of_year(2019).unwrap(), 6);
        assert!(c.period_of_year(1989).is_err());
        assert!(c.period_of_year(2020).is_err());
    }

    #[test]
    fn years_of_period_round_trip() {
        let c = cal();
        assert_eq!(c.years_of_period(3).unwrap(), 2000..=2004);
        assert_eq!(c.period_start_year(6).unwrap(), 2015);
        assert!(c.years_of_period(0).is_err());
        assert!(c.years_of_period(7).is_err());
    }

    #[test]
    fn neighbor_period_steps_toward_reference() {
        let c = cal();
        assert_eq!(c.neighbor_period(4).unwrap(), 3);
        assert_eq!(c.neighbor_period(6).unwrap(), 5);
        assert_eq!(c.neighbor_period(1).unwrap(), 2);
        assert_eq!(c.neighbor_period(2).unwrap(), 3);
        assert!(c.neighbor_period(3).is_err());
    }

    #[test]
    fn outward_order_is_topological() {
        let c = cal();
        let order = c.periods_outward();
        assert_eq!(order, vec![3, 4, 5, 6, 2, 1]);
        for (pos, &p) in order.iter().enumerate() {
            if p != c.reference_period() {
                let n = c.neighbor_period(p).unwrap();
                let npos = order.iter().position(|&x| x == n).unwrap();
                assert!(npos < pos, "neighbor of {p} must precede it");
            }
        }
    }

    #[test]
    fn misaligned_calendar_rejected() {
        assert!(PeriodCalendar::new(1990, 2018, 5, 2000).is_err());
        assert!(PeriodCalendar::new(1990, 2019, 5, 1999).is_err());
        assert!(PeriodCalendar::new(1990, 2019, 5, 2024).is_err());
        assert!(PeriodCalendar::new(1990, 2019, 0, 1990).is_err());
        assert!(PeriodCalendar::new(2000, 1990, 5, 2000).is_err());
    }

    fn small_rows() -> Vec<CountryDef> {
        let mk = |id, region, chief| CountryDef {
            id,
            name: format!("country-{id}"),
            region_id: region,
            super_region_id: chief,
        };
        vec![
            mk(10, 1, 100),
            mk(11, 1, 100),
            mk(20, 2, 100),
            mk(30, 3, 200),
            mk(31, 3, 200),
        ]
    }

    #[test]
    fn hierarchy_indices_are_dense_and_sorted() {
        let g = GeoHierarchy::new(small_rows()).unwrap();
        assert_eq!(g.n_countries(), 5);
        assert_eq!(g.n_regions(), 3);
        assert_eq!(g.n_super_regions(), 2);
        assert_eq!(g.country_index(20).unwrap(), 2);
        assert_eq!(g.region_of_country(2), 1);
        assert_eq!(g.super_of_country(4), 1);
        assert_eq!(g.countries_of_region(0), &[0, 1]);
        assert_eq!(g.regions_of_super(0), &[0, 1]);
        assert_eq!(g.countries_of_super(1), vec![3, 4]);
        assert!(g.country_index(99).is_err());
    }

    #[test]
    fn region_in_two_super_regions_rejected() {
        let mut rows = small_rows();
        rows.push(CountryDef {
            id: 40,
            name: "stray".into(),
            region_id: 3,
            super_region_id: 100,
        });
        let err = GeoHierarchy::new(rows).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn duplicate_country_rejected() {
        let mut rows = small_rows();
        rows.push(CountryDef {
            id: 10,
            name: "dup".into(),
            region_id: 1,
            super_region_id: 100,
        });
        assert!(GeoHierarchy::new(rows).is_err());
    }

    proptest! {
        #[test]
        fn neighbor_reduces_distance_to_reference(
            first in 1900i32..2000,
            n_periods in 2usize..12,
            len in 1u32..8,
            ref_off in 0usize..12,
        ) {
            let ref_off = ref_off % n_periods;
            let last = first + (n_periods as u32 * len) as i32 - 1;
            let c = PeriodCalendar::new(first, last, len, first + (ref_off as u32 * len) as i32).unwrap();
            let p0 = c.reference_period();
            for p in 1..=c.n_periods() {
                if p == p0 {
                    prop_assert!(c.neighbor_period(p).is_err());
                } else {
                    let n = c.neighbor_period(p).unwrap();
                    prop_assert_eq!(
                        (n as i64 - p0 as i64).abs(),
                        (p as i64 - p0 as i64).abs() - 1
                    );
                    // iterating neighbors always reaches the reference period
                    let mut cur = p;
                    let mut steps = 0;
                    while cur != p0 {
                        cur = c.neighbor_period(cur).unwrap();
                        steps += 1;
                        prop_assert!(steps <= c.n_periods());
                    }
                }
            }
        }

        #[test]
        fn every_year_maps_into_its_period(
            year in 1990i32..=2019,
        ) {
            let c = cal();
            let p = c.period_of_year(year).unwrap();
            let range = c.years_of_period(p).unwrap();
            prop_assert!(range.contains(&year));
        }
    }
}
