use std::fs;

use mcf_core::geometry::{compute_visibilities, ImageGrid};
use mcf_core::io::{write_image_pgm, write_layout_csv, Manifest};
use ndarray::Array2;
use serde::Serialize;

use crate::cli::GeometryArgs;
use crate::config::RunConfig;
use crate::exit::{self, Failure};

/// Largest grid for which the coverage map is also written as an image.
const MAX_MAP_SIDE: usize = 4096;

#[derive(Serialize)]
struct GeometryReport {
    cores: usize,
    grid_side: usize,
    fov: f64,
    distinct: usize,
    max_distinct: usize,
    far_field: bool,
    multiplicity_histogram: Vec<(usize, usize)>,
}

fn signed(cell: usize, n: usize) -> i64 {
    if cell >= n.div_ceil(2) {
        cell as i64 - n as i64
    } else {
        cell as i64
    }
}

pub fn run(mut cfg: RunConfig, args: &GeometryArgs) -> Result<u8, Failure> {
    args.model.apply(&mut cfg);
    cfg.validate()?;
    let layout = cfg.build_layout()?;
    let grid = match cfg.grid.side {
        Some(n) => cfg.build_grid(&layout, n)?,
        None => ImageGrid::resolving(&layout)?,
    };
    let vis = compute_visibilities(&layout, &grid)?;
    let report = GeometryReport {
        cores: layout.core_count(),
        grid_side: grid.side(),
        fov: grid.fov(),
        distinct: vis.distinct_count(),
        max_distinct: vis.max_distinct(),
        far_field: layout.is_far_field(),
        multiplicity_histogram: vis.multiplicity_histogram().into_iter().collect(),
    };
    println!("cores (Q): {}", report.cores);
    println!(
        "grid: {} x {} pixels, field of view {:e} m",
        grid.side(),
        grid.side(),
        grid.fov()
    );
    println!(
        "distinct visibilities: {} (maximum Q(Q-1)+1 = {})",
        report.distinct, report.max_distinct
    );
    println!("multiplicity histogram (multiplicity: cells):");
    for (mult, cells) in &report.multiplicity_histogram {
        println!("  {mult}: {cells}");
    }
    if !report.far_field {
        log::warn!("layout is outside the far-field regime at this propagation distance");
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_layout_csv(&dir.join("layout.csv"), layout.positions())?;
        let n = grid.side();
        let mut w = String::new();
        w.push_str("bin_x,bin_y,multiplicity\n");
        for (cell, m) in vis.multiplicity() {
            w.push_str(&format!(
                "{},{},{m}\n",
                signed(cell[0], n),
                signed(cell[1], n)
            ));
        }
        fs::write(dir.join("coverage.csv"), w)?;
        let mut files = vec!["layout.csv", "coverage.csv", "report.json"];
        if n <= MAX_MAP_SIDE {
            let mut map = Array2::<f64>::zeros((n, n));
            for (cell, m) in vis.multiplicity() {
                // Centered display: bin 0 at pixel n/2.
                map[[(cell[0] + n / 2) % n, (cell[1] + n / 2) % n]] = *m as f64;
            }
            write_image_pgm(&dir.join("coverage.pgm"), map.view())?;
            files.push("coverage.pgm");
        } else {
            log::info!("grid side {n} exceeds {MAX_MAP_SIDE}; coverage written as CSV only");
        }
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
        let mut manifest = Manifest::new("geometry", cfg.seed, &cfg)?;
        for f in files {
            manifest.record_file(dir, f)?;
        }
        manifest.write(&dir.join("manifest.json"))?;
    }
    Ok(exit::OK)
}
