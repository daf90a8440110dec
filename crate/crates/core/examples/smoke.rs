use varlp::harness::{run_suite, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::default();
    let rep = run_suite("sparsity", &cfg).unwrap();
    println!("{}", rep.to_csv());
}
