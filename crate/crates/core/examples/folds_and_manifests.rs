//! Manifest parsing, recordist-stratified folds and manifest union.

use std::path::Path;

use birdsong::dataset::{assign_folds, parse_manifest, union_manifests, FoldScheme};

fn main() -> birdsong::Result<()> {
    let a = "clip_id,audio_path,labels,fold,recordist\n\
             c1,a/1.wav,robin,,ann\nc2,a/2.wav,robin;wren,,bob\nc3,a/3.wav,wren,,ann\nc4,a/4.wav,owl,,cy\n";
    let m = parse_manifest(a, Path::new("a.csv"), Path::new("/data"), "dawn".into())?;
    println!("{} clips, labelling {:?}, vocabulary {:?}", m.len(), m.labelling(), m.vocabulary().names());

    let folded = assign_folds(&m, FoldScheme::StratifiedByRecordist { k: 2 })?;
    for e in folded.entries() {
        println!("{} by {:?} -> fold {:?}", e.clip_id, e.recordist, e.fold);
    }

    let b = "clip_id,audio_path,labels,fold,recordist\nc1,b/1.wav,owl,,dee\n";
    let other = parse_manifest(b, Path::new("b.csv"), Path::new("/data"), "dusk".into())?;
    let both = union_manifests(&folded, &other);
    println!("union ids: {:?}", both.entries().iter().map(|e| &e.clip_id).collect::<Vec<_>>());
    Ok(())
}
