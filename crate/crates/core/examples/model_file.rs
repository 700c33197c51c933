//! Builds a small tree ensemble by hand, writes it in the model JSON schema
//! and reloads it.
//!
//! ```text
//! cargo run --example model_file
//! ```

use spmv_cascade::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use spmv_cascade::inference::{Classifier, Tree, TreeEnsembleModel};

fn main() {
    let ndiag = FEATURE_NAMES.iter().position(|n| *n == "ndiag").expect("known feature");
    let model = TreeEnsembleModel::new(
        Some("toy".into()),
        vec!["DIA".into(), "CSR".into()],
        vec![
            vec![Tree::stump(ndiag, 32.0, 1.0, -1.0)],
            vec![Tree::leaf(0.0)],
        ],
    )
    .expect("valid model");
    let json = model.to_json();
    println!("{json}");
    let reloaded = TreeEnsembleModel::from_json(&json).expect("round trip");
    for d in [5.0, 100.0] {
        let mut x = [0.0; FEATURE_COUNT];
        x[ndiag] = d;
        let p = reloaded.predict(&FeatureVector::from_array(x));
        println!("ndiag={d}: {} (scores {:?})", p.label, p.scores);
    }
}
