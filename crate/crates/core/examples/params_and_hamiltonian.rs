//! Model parameters, the Hamiltonian and the stationary state.
//!
//! `cargo run --example params_and_hamiltonian`

use hughes_spectral::model::{hamiltonian, hamiltonian_dp, stationary_solution, validate_params};

fn main() -> hughes_spectral::Result<()> {
    let params = validate_params(1.0, 0.25, 0.0, 10.0)?;
    println!("f(rho_bar) = {}", params.f_bar());
    println!("subcritical: {}", params.is_subcritical());
    println!("decay constant c = {:.6}", params.decay_constant());

    let (rho, grad) = stationary_solution(&params);
    for beta in [0.0, 1.0, 2.0] {
        let h = hamiltonian(rho, grad, beta, &params)?;
        let dp = hamiltonian_dp(rho, grad, beta, &params)?;
        println!("beta = {beta}: H = {h:+.6}, D_pH = ({:.6}, {:.6})", dp[0], dp[1]);
    }

    match validate_params(1.0, 1.2, 0.0, 10.0) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
