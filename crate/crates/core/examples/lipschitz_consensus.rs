//! Sensors agree on the step constant `L = 2δmax + max|A_i| + 2` by
//! max-consensus. After as many rounds as the graph diameter every sensor
//! holds the global value.

use mmnetloc::graph::{corner_anchors, generate_geometric_network};
use mmnetloc::mm::lipschitz_bound;
use mmnetloc::node_sim::max_consensus_lipschitz;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = generate_geometric_network(40, 2, 0.25, &corner_anchors(2), 0.4, 8)?;
    let global = lipschitz_bound(&net);
    let diameter = net.diameter();
    println!("global L = {global}, diameter = {diameter}");
    for rounds in 0..=diameter {
        let local = max_consensus_lipschitz(&net, rounds);
        let agreed = local.iter().filter(|&&l| l == global).count();
        println!(
            "after {rounds:>2} rounds: {agreed:>2}/{} sensors hold L",
            net.n()
        );
    }
    Ok(())
}
