//! Generates a small test split of every synthetic dataset, prints one example
//! of each as ASCII art and saves the sets as `.rcds` files.
//!
//! cargo run --example generate_datasets -- [out_dir]

use recon_cluster::datasets::{generate, save_dataset, Dataset, DatasetName, DatasetSpec, Split};

fn main() -> recon_cluster::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/datasets".into());
    std::fs::create_dir_all(&out).map_err(|e| recon_cluster::Error::io(&out, e))?;
    for name in DatasetName::ALL.into_iter().filter(|n| !n.needs_mnist()) {
        let examples = generate(&DatasetSpec::new(name, Split::TestMulti, 100, 0))?;
        let (width, height) = name.geometry();
        let ex = &examples[0];
        let labels = ex.truth.labels();
        println!("{name}: {width}x{height}, {} objects", ex.truth.object_count());
        for y in 0..height {
            let row: String = (0..width)
                .map(|x| {
                    let i = y * width + x;
                    match (ex.image.pixels()[i] > 0.5, ex.truth.eval_mask()[i]) {
                        (false, _) => '.',
                        (true, true) => (b'a' + labels[i] as u8) as char,
                        (true, false) => '#',
                    }
                })
                .collect();
            println!("  {row}");
        }
        let path = format!("{out}/{name}_test_multi.rcds");
        save_dataset(
            &path,
            &Dataset {
                name: name.to_string(),
                width,
                height,
                examples,
            },
        )?;
        println!("  saved {path}");
    }
    Ok(())
}
