//! The "Competition" selection algorithm: complexity-priced offspring
//! allocation without speciation, plus the deadpool variant used by the ALife
//! loop ("Augmented Competition").

use rand::Rng;
use thiserror::Error;

use crate::genotype::{DxnnGenotype, ElementId};
use crate::tuning::round_half_away;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("competition selection needs at least 2 scored individuals, got {0}")]
    TooFew(usize),
    #[error("cannot sample a parent from an empty dead pool")]
    EmptyPool,
}

/// Scored individual as selection sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub id: ElementId,
    pub fitness: f64,
    pub tot_neurons: usize,
}

impl Scored {
    pub fn new(id: ElementId, fitness: f64, tot_neurons: usize) -> Self {
        Scored { id, fitness, tot_neurons }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Survivors with their normalized alloted offspring count (NAO >= 1).
    /// NAO == 1 survives childless; NAO > 1 also spawns NAO - 1 mutants.
    pub survivors: Vec<(ElementId, u32)>,
    pub deleted: Vec<ElementId>,
}

/// The nine-step Competition procedure. The average energy cost is computed
/// over the full scored population, before the bottom-half cut.
pub fn competition_select(
    scored: &[Scored],
    population_limit: usize,
    rng: &mut impl Rng,
) -> Result<SelectionOutcome, SelectionError> {
    if scored.len() < 2 {
        return Err(SelectionError::TooFew(scored.len()));
    }
    let tot_energy: f64 = scored.iter().map(|s| s.fitness).sum();
    let tot_neurons: usize = scored.iter().map(|s| s.tot_neurons).sum();
    let avg_cost = tot_energy / tot_neurons as f64;

    // Fitness descending; ties go to the more compact individual.
    let mut ranked: Vec<Scored> = scored.to_vec();
    ranked.sort_by(|a, b| {
        b.fitness
            .partial_cmp(&a.fitness)
            .unwrap()
            .then(a.tot_neurons.cmp(&b.tot_neurons))
            .then(a.id.serial.cmp(&b.id.serial))
    });
    let cut = ranked.len() - ranked.len() / 2;
    let mut deleted: Vec<ElementId> = ranked.split_off(cut).iter().map(|s| s.id).collect();
    let top = ranked;

    if tot_energy <= 0.0 {
        // Cold start: nothing has scored yet. Every top-half survivor gets
        // NAO 1 and the remaining capacity goes to uniformly drawn survivors.
        let mut nao = vec![1u32; top.len()];
        for _ in top.len()..population_limit {
            nao[rng.random_range(0..top.len())] += 1;
        }
        let survivors = top.iter().zip(nao).map(|(s, n)| (s.id, n)).collect();
        return Ok(SelectionOutcome { survivors, deleted });
    }

    let alloted: Vec<i64> = top
        .iter()
        .map(|s| round_half_away(s.fitness / avg_cost / s.tot_neurons as f64))
        .collect();
    let total_new: i64 = alloted.iter().sum();
    if total_new <= 0 {
        // Every allotment rounded to zero; fall back to the cold-start rule
        // rather than divide by zero.
        let mut nao = vec![1u32; top.len()];
        for _ in top.len()..population_limit {
            nao[rng.random_range(0..top.len())] += 1;
        }
        let survivors = top.iter().zip(nao).map(|(s, n)| (s.id, n)).collect();
        return Ok(SelectionOutcome { survivors, deleted });
    }
    let normalizer = total_new as f64 / population_limit as f64;

    let mut survivors = Vec::new();
    for (s, ao) in top.iter().zip(&alloted) {
        let nao = round_half_away(*ao as f64 / normalizer);
        if nao <= 0 {
            deleted.push(s.id);
        } else {
            survivors.push((s.id, nao as u32));
        }
    }
    Ok(SelectionOutcome { survivors, deleted })
}

/// Fixed-capacity archive of the best dead genotypes, sorted by fitness
/// descending. Insertion past capacity evicts the minimum-fitness entry,
/// which may be the newcomer itself.
#[derive(Debug, Clone)]
pub struct DeadPool {
    capacity: usize,
    entries: Vec<(DxnnGenotype, f64)>,
}

impl DeadPool {
    pub fn new(capacity: usize) -> Self {
        DeadPool { capacity, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(DxnnGenotype, f64)] {
        &self.entries
    }

    pub fn fitnesses(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, f)| *f)
    }

    pub fn insert(&mut self, genotype: DxnnGenotype, fitness: f64) {
        let pos = self.entries.partition_point(|(_, f)| *f >= fitness);
        self.entries.insert(pos, (genotype, fitness));
        if self.entries.len() > self.capacity {
            self.entries.pop();
        }
    }

    /// Overwrite the stored fitness of entry `idx` (re-entry re-evaluation),
    /// keeping the list sorted.
    pub fn reassess(&mut self, idx: usize, fitness: f64) {
        let (genotype, _) = self.entries.remove(idx);
        self.insert(genotype, fitness);
    }

    /// Pick a parent with probability proportional to its competition weight
    /// (fitness / average energy cost / size). The flag is true with
    /// probability 0.10: the parent re-enters the world itself instead of
    /// producing an offspring.
    pub fn sample_parent(&self, rng: &mut impl Rng) -> Result<(usize, bool), SelectionError> {
        if self.entries.is_empty() {
            return Err(SelectionError::EmptyPool);
        }
        let weights = self.sample_weights();
        let total: f64 = weights.iter().sum();
        let idx = if total <= 0.0 {
            rng.random_range(0..self.entries.len())
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = self.entries.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let reentry = rng.random_bool(0.10);
        Ok((idx, reentry))
    }

    /// Competition steps 1 and 4 over the pool entries, unnormalized.
    pub fn sample_weights(&self) -> Vec<f64> {
        let tot_energy: f64 = self.entries.iter().map(|(_, f)| *f).sum();
        let tot_neurons: usize = self.entries.iter().map(|(g, _)| g.size()).sum();
        if tot_energy <= 0.0 || tot_neurons == 0 {
            return vec![1.0; self.entries.len()];
        }
        let avg_cost = tot_energy / tot_neurons as f64;
        self.entries
            .iter()
            .map(|(g, f)| (f / avg_cost / g.size() as f64).max(0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{create_seed, IoTemplate, SeedSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn id(serial: u64) -> ElementId {
        ElementId { kind: crate::genotype::ElementKind::Core, serial }
    }

    #[test]
    fn tie_broken_by_compactness() {
        let scored = vec![Scored::new(id(0), 10.0, 2), Scored::new(id(1), 10.0, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = competition_select(&scored, 2, &mut rng).unwrap();
        assert!(out.survivors.iter().all(|(i, _)| *i == id(1)));
        assert!(out.deleted.contains(&id(0)));
    }

    #[test]
    fn hand_applied_nine_steps() {
        // TotEnergy=100, TotNeurons=2, avg=50; survivor AO=2, TNO=2,
        // normalizer=0.2, NAO=10 -> parent plus 9 offspring.
        let scored = vec![Scored::new(id(0), 100.0, 1), Scored::new(id(1), 0.0, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = competition_select(&scored, 10, &mut rng).unwrap();
        assert_eq!(out.survivors, vec![(id(0), 10)]);
        assert_eq!(out.deleted, vec![id(1)]);
    }

    #[test]
    fn symmetric_population_gets_equal_nao() {
        let scored: Vec<Scored> = (0..4).map(|i| Scored::new(id(i), 7.0, 3)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = competition_select(&scored, 4, &mut rng).unwrap();
        let naos: Vec<u32> = out.survivors.iter().map(|(_, n)| *n).collect();
        assert!(naos.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn bottom_half_cut_uses_floor() {
        let scored: Vec<Scored> =
            (0..5).map(|i| Scored::new(id(i), (5 - i) as f64, 1)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = competition_select(&scored, 5, &mut rng).unwrap();
        // floor(5/2) = 2 removed by the cut; survivors keep the top fitnesses.
        let cut_survivor_count = out.survivors.len()
            + out.deleted.iter().filter(|d| ![id(3), id(4)].contains(d)).count();
        assert_eq!(cut_survivor_count, 3);
        assert!(out.deleted.contains(&id(3)));
        assert!(out.deleted.contains(&id(4)));
    }

    #[test]
    fn all_zero_fitness_uses_cold_start_rule() {
        let scored: Vec<Scored> = (0..4).map(|i| Scored::new(id(i), 0.0, 1)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = competition_select(&scored, 6, &mut rng).unwrap();
        assert_eq!(out.survivors.len(), 2);
        let total: u32 = out.survivors.iter().map(|(_, n)| *n).sum();
        assert_eq!(total as usize, 6);
    }

    #[test]
    fn scale_invariance_of_ordering() {
        let base = vec![
            Scored::new(id(0), 12.0, 2),
            Scored::new(id(1), 30.0, 5),
            Scored::new(id(2), 7.0, 1),
            Scored::new(id(3), 22.0, 3),
        ];
        let scaled: Vec<Scored> =
            base.iter().map(|s| Scored::new(s.id, s.fitness * 1000.0, s.tot_neurons)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = competition_select(&base, 8, &mut rng).unwrap();
        let b = competition_select(&scaled, 8, &mut rng).unwrap();
        let ids_a: Vec<ElementId> = a.survivors.iter().map(|(i, _)| *i).collect();
        let ids_b: Vec<ElementId> = b.survivors.iter().map(|(i, _)| *i).collect();
        assert_eq!(ids_a, ids_b);
        // Relative NAO ordering matches too.
        let ord = |out: &SelectionOutcome| -> Vec<bool> {
            out.survivors.windows(2).map(|w| w[0].1 >= w[1].1).collect()
        };
        assert_eq!(ord(&a), ord(&b));
    }

    fn pool_with(fits: &[f64]) -> DeadPool {
        let spec = SeedSpec::new(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 1)]);
        let pop = create_seed(&spec, fits.len(), fits.len(), 77).unwrap();
        let mut pool = DeadPool::new(fits.len());
        for (g, f) in pop.members.into_iter().zip(fits) {
            pool.insert(g, *f);
        }
        pool
    }

    #[test]
    fn deadpool_evicts_minimum() {
        let spec = SeedSpec::new(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 1)]);
        let pop = create_seed(&spec, 3, 3, 1).unwrap();
        let mut members = pop.members.into_iter();
        let mut pool = DeadPool::new(2);
        pool.insert(members.next().unwrap(), 5.0);
        pool.insert(members.next().unwrap(), 3.0);
        pool.insert(members.next().unwrap(), 4.0);
        let fits: Vec<f64> = pool.fitnesses().collect();
        assert_eq!(fits, vec![5.0, 4.0]);
    }

    #[test]
    fn deadpool_evicts_newcomer_when_weakest() {
        let mut pool = pool_with(&[5.0, 4.0]);
        let spec = SeedSpec::new(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 1)]);
        let g = create_seed(&spec, 1, 1, 2).unwrap().members.remove(0);
        pool.insert(g, 1.0);
        let fits: Vec<f64> = pool.fitnesses().collect();
        assert_eq!(fits, vec![5.0, 4.0]);
    }

    #[test]
    fn deadpool_insert_into_empty() {
        let pool = pool_with(&[2.0]);
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn single_entry_pool_always_sampled() {
        let pool = pool_with(&[2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (idx, _) = pool.sample_parent(&mut rng).unwrap();
            assert_eq!(idx, 0);
        }
    }

    #[test]
    fn reentry_frequency_is_ten_percent() {
        let pool = pool_with(&[2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 10_000;
        let reentries = (0..trials)
            .filter(|_| pool.sample_parent(&mut rng).unwrap().1)
            .count();
        let freq = reentries as f64 / trials as f64;
        assert!((freq - 0.10).abs() < 0.01, "re-entry frequency {freq}");
    }

    #[test]
    fn sampling_ratio_follows_competition_weights() {
        // Equal sizes, fitness 3 and 1: weights 3:1.
        let pool = pool_with(&[3.0, 1.0]);
        let w = pool.sample_weights();
        assert!((w[0] / w[1] - 3.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let trials = 10_000;
        let first = (0..trials)
            .filter(|_| pool.sample_parent(&mut rng).unwrap().0 == 0)
            .count();
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.75).abs() < 0.02, "sampling frequency {freq}");
    }

    #[test]
    fn empty_pool_sampling_is_an_error() {
        let pool = DeadPool::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(pool.sample_parent(&mut rng), Err(SelectionError::EmptyPool)));
    }
}
