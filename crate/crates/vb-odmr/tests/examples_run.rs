//! Every example doubles as a smoke test: include each one and run its
//! entry point.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));

            #[test]
            fn runs() {
                main().expect("example should run cleanly");
            }
        }
    };
}

example!(transition_lines);
example!(odmr_spectrum);
example!(fit_odmr);
example!(thermal_shift);
example!(relaxation_rates);
example!(phonon_modes);
example!(sensing_sensitivity);
example!(nuclear_polarization);
example!(csv_io);
example!(full_pipeline);
