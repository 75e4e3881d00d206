use lyap_core::*;

#[test]
fn probe_p_near_one() {
    let opts = BetaOptions::default();
    for pv in [1.02, 1.05, 1.1, 1.2, 1.5] {
        let p = Exponent::new(pv).unwrap();
        let b1 = compute_beta(&Grid::line(1.0, 1025).unwrap(), p, &opts).unwrap();
        let b2 = compute_beta(&Grid::line(1.0, 4097).unwrap(), p, &opts).unwrap();
        let sh = beta_by_shooting(1.0, p, 8192).unwrap();
        println!(
            "p={pv:<5} descent(1025)={:<10.6} descent(4097)={:<10.6} shooting={:<10.6}",
            b1.value, b2.value, sh
        );
    }
    // Ramp quotient at p=1.05 as an upper bound sanity check.
    let g = Grid::line(1.0, 4097).unwrap();
    let ramp = GridFunction::from_fn(&g, |x| x[0] - 0.5);
    let q = rayleigh_quotient(&ramp, Exponent::new(1.05).unwrap()).unwrap();
    println!("I_1.05(x - 1/2) = {q:.6}");
}
