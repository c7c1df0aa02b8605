//! Documented file layouts of a run directory.

pub const SCHEMA: &str = r#"run directory layout (schema_version 1)

config.toml                 copy of the configuration that produced the run
summary.txt                 human-readable tables, failing entries, sweep signature
lengths.csv                 t, L_k<k>...           radial length from s = 1 to the origin
curvature_sups.csv          t, annulus_k<k>..., disc_k<k>...
                            resolved sup |K| over s in [ln(1/(1-eps_hat)), -ln eps_hat]
                            and over r <= 1 - eps_hat (NaN when nothing is resolved)
convergence.csv             t, hyp_k<k>..., ref_k<k>...
                            sup |u_k - (-ln s + 1/2 ln(1+2t))| and sup |u_k - u_kmax|
                            on the reporting annulus
k<k>/stats.json             {
                              schema_version: 1,
                              k, status: "complete" | "failed", failure: string | null,
                              t_end, t_reached,
                              solver: {steps, newton_iterations, rejected_steps, min_dt, max_dt},
                              clipped_points, config_sha256,
                              snapshots: [{index, time, polar_file, polar_sha256,
                                           cap_file, cap_sha256, bc_uncertainty}]
                            }
k<k>/verification.json      {entries: [{name, region, times, max_violation, tolerance, pass, note?}],
                             provenance: config sha256}
                            max_violation is signed (negative = margin) and null when not applicable
k<k>/snapshots/snap_NNN_polar.csv
k<k>/snapshots/snap_NNN_cap.csv
                            chart,time
                            log_polar|cartesian_radial,<t>
                            coord,value
                            <s or r>,<u or v>        one row per node, increasing coord

All CSV numbers are written with 17 significant digits and round-trip exactly.
Table CSVs have one row per snapshot time and one column per k.
"#;
