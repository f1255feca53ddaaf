//! Seeded random DAG generator for property tests, benchmarks and the CLI's
//! `--random` mode.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;

use super::{Binding, Category, StructuredSop, Subtask};

/// Shape parameters for generated graphs. Generated graphs always satisfy
/// the parse-time invariants; `defect_rate` only injects data-flow defects
/// (bindings to outputs that do not exist, or to subtasks that are not
/// dependencies).
#[derive(Debug, Clone)]
pub struct DagGenerator {
    pub min_subtasks: usize,
    pub max_subtasks: usize,
    /// Probability that an earlier subtask becomes a dependency.
    pub edge_prob: f64,
    /// Probability that a dependency edge carries a binding.
    pub binding_prob: f64,
    /// Probability that a binding uses a different local name.
    pub rename_prob: f64,
    pub max_inputs: usize,
    pub max_outputs: usize,
    /// Per-binding probability of a data-flow defect.
    pub defect_rate: f64,
}

impl Default for DagGenerator {
    fn default() -> Self {
        DagGenerator {
            min_subtasks: 1,
            max_subtasks: 12,
            edge_prob: 0.35,
            binding_prob: 0.8,
            rename_prob: 0.3,
            max_inputs: 2,
            max_outputs: 3,
            defect_rate: 0.0,
        }
    }
}

const WORDS: &[&str] = &[
    "mix", "place", "bake", "order", "assemble", "verify", "ship", "record", "check", "heat",
    "réserver", "größe", "invoice", "call", "parse",
];
const SHARED_INPUTS: &[&str] = &["water", "Power Supply", "customer id", "oven"];

impl DagGenerator {
    pub fn with_defects(mut self, rate: f64) -> Self {
        self.defect_rate = rate;
        self
    }

    pub fn with_max_subtasks(mut self, n: usize) -> Self {
        self.max_subtasks = n;
        self
    }

    /// Same graph for the same seed on every platform.
    pub fn generate_seeded(&self, seed: u64) -> StructuredSop {
        self.generate(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> StructuredSop {
        let n = rng.gen_range(self.min_subtasks..=self.max_subtasks.max(self.min_subtasks));
        // Topological position -> id; ids are a permutation so that neither
        // id order nor insertion order gives the topological order away.
        let mut labels: Vec<usize> = (1..=n).collect();
        labels.shuffle(rng);
        let ids: Vec<String> = labels.iter().map(|k| format!("subtask{k}")).collect();

        let mut subtasks: Vec<Subtask> = Vec::with_capacity(n);
        for i in 0..n {
            let category = *Category::ALL.choose(rng).expect("nonempty");
            let mut st = Subtask::new(ids[i].clone(), category);
            st.name = format!("{} step {}", WORDS.choose(rng).unwrap(), i + 1);
            st.description = (0..rng.gen_range(1..6))
                .map(|_| *WORDS.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ");

            for k in 0..rng.gen_range(0..=self.max_inputs) {
                if rng.gen_bool(0.25) {
                    let shared = SHARED_INPUTS.choose(rng).unwrap().to_string();
                    if !st.inputs.contains(&shared) {
                        st.inputs.push(shared);
                    }
                } else {
                    st.inputs.push(format!("in{}_{k}", i + 1));
                }
            }
            for k in 0..rng.gen_range(1..=self.max_outputs.max(1)) {
                st.outputs.push(format!("out{}_{k}", i + 1));
            }

            let mut slot = 0;
            for j in 0..i {
                if st.dependencies.len() >= 3 || !rng.gen_bool(self.edge_prob) {
                    continue;
                }
                st.dependencies.push(ids[j].clone());
                if !rng.gen_bool(self.binding_prob) {
                    continue;
                }
                let parent = &subtasks[j];
                let out = parent.outputs.choose(rng).unwrap().clone();
                let bound_as = if rng.gen_bool(self.rename_prob) {
                    slot += 1;
                    format!("arg{}_{slot}", i + 1)
                } else if rng.gen_bool(0.3) {
                    // same variable, different spelling
                    out.to_uppercase().replacen('_', " ", 1)
                } else {
                    out.clone()
                };
                if st
                    .inputs_from_dependencies
                    .iter()
                    .any(|b| super::normalize_var(&b.bound_as) == super::normalize_var(&bound_as))
                {
                    continue;
                }
                st.inputs_from_dependencies
                    .push(Binding::new(parent.id.clone(), out, bound_as));
            }

            if self.defect_rate > 0.0 {
                let non_deps: Vec<&String> =
                    ids[..i].iter().filter(|d| !st.dependencies.contains(d)).collect();
                for (k, b) in st.inputs_from_dependencies.iter_mut().enumerate() {
                    if !rng.gen_bool(self.defect_rate) {
                        continue;
                    }
                    if !non_deps.is_empty() && rng.gen_bool(0.5) {
                        b.source_subtask = (*non_deps.choose(rng).unwrap()).clone();
                    } else {
                        b.source_output = format!("ghost{}_{k}", i + 1);
                    }
                }
            }
            if rng.gen_bool(0.1) {
                st.extra
                    .insert("confidence".into(), Value::from(rng.gen_range(0..100)));
            }
            subtasks.push(st);
        }
        subtasks.shuffle(rng);
        StructuredSop::from_subtasks(subtasks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_graphs_are_valid() {
        let gen = DagGenerator::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let sop = gen.generate(&mut rng);
            sop.check().unwrap();
            assert!(sop.len() <= 12);
        }
    }

    #[test]
    fn defective_graphs_still_parse_valid() {
        let gen = DagGenerator::default().with_defects(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            gen.generate(&mut rng).check().unwrap();
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let gen = DagGenerator::default();
        let a = gen.generate(&mut ChaCha8Rng::seed_from_u64(42));
        let b = gen.generate(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
