//! Recomputes the Caccioppoli calibration over the golden suite and
//! prints the constant-free ratios. The frozen regression value in
//! `liouville::CACCIOPPOLI_GOLDEN_MAX_RATIO` comes from this run.

fn main() {
    let rep = graphpot::liouville::calibrate_caccioppoli(1e-9).expect("golden suite is certified");
    for (name, r) in &rep.per_instance {
        println!("{name}: max constant-free ratio {r:.6}");
    }
    println!("overall max ratio {:.6}", rep.max_ratio);
    println!("frozen regression value {:.4}", graphpot::liouville::CACCIOPPOLI_GOLDEN_MAX_RATIO);
    println!("all audits pass: {}", rep.all_pass);
}
