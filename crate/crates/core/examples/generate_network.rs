//! Draw a 50-sensor network with mean degree close to 6, add noisy ranges,
//! save it as JSON and load it back.
//!
//! `cargo run --example generate_network -- [seed] [out.json]`

use mmnetloc::graph::{
    corner_anchors, degree_stats, generate_measurements, generate_with_target_degree, load_network,
    save_network,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;
    let out = args.next().unwrap_or_else(|| "network.json".into());

    let (net, radius) = generate_with_target_degree(50, 2, 6.0, &corner_anchors(2), 0.65, seed)?;
    let meas = generate_measurements(&net, 0.01, seed)?;
    let (max_degree, max_links) = degree_stats(&net);
    println!(
        "radius {radius:.4}: {} edges, max degree {max_degree}, most anchors per sensor {max_links}",
        net.num_edges()
    );
    println!(
        "mean degree {:.2}, {} anchor links",
        net.mean_degree(),
        net.num_links()
    );

    save_network(&out, &net, &meas, Some(seed))?;
    let (back, back_meas, _) = load_network(&out)?;
    assert_eq!(back.edges(), net.edges());
    assert_eq!(back_meas.d, meas.d);
    println!("saved to {out} and reloaded bit for bit");
    Ok(())
}
