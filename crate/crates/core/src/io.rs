//! Snapshot, VTK and manifest writers.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::element::ElementResponse;
use crate::integrator::State;
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::scalar::Scalar;
use crate::scenarios::norm3;

pub const SNAPSHOT_HEADER: &str = "t,node,x0,y0,u,v,w,vx,vy,vz,vmag";
pub const ELEMENT_HEADER: &str =
    "t,element,exx,eyy,ezz,gxy,gyz,gxz,sxx,syy,szz,sxy,syz,sxz,strain_exceeded,stress_exceeded";

/// Round-trip formatting used by every writer.
pub fn fmt<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

fn check_len<T>(what: &str, v: &[T], expected: usize) -> io::Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{what} has {} entries, expected {expected}", v.len()),
        ))
    }
}

/// One row per node: position, displacement, velocity and speed.
pub fn write_snapshot_csv<T: Scalar, W: Write>(out: &mut W, mesh: &Mesh<T>, t: T, a: &[T], adot: &[T]) -> io::Result<()> {
    let n = 3 * mesh.n_nodes();
    check_len("displacement", a, n)?;
    check_len("velocity", adot, n)?;
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    let t = fmt(t);
    for (i, node) in mesh.nodes().iter().enumerate() {
        let (d, v) = (&a[3 * i..3 * i + 3], &adot[3 * i..3 * i + 3]);
        let vmag = norm3(v);
        writeln!(
            out,
            "{t},{i},{},{},{},{},{},{},{},{},{}",
            fmt(node.x0),
            fmt(node.y0),
            fmt(d[0]),
            fmt(d[1]),
            fmt(d[2]),
            fmt(v[0]),
            fmt(v[1]),
            fmt(v[2]),
            fmt(vmag)
        )?;
    }
    Ok(())
}

/// One row per element: Voigt strain and stress plus threshold flags.
pub fn write_element_csv<T: Scalar, W: Write>(
    out: &mut W,
    t: T,
    responses: &[ElementResponse<T>],
    material: &MaterialParams<T>,
) -> io::Result<()> {
    writeln!(out, "{ELEMENT_HEADER}")?;
    let t = fmt(t);
    for (e, r) in responses.iter().enumerate() {
        write!(out, "{t},{e}")?;
        for x in r.strain.iter().chain(&r.stress) {
            write!(out, ",{}", fmt(*x))?;
        }
        writeln!(
            out,
            ",{},{}",
            u8::from(r.exceeds_strain(material.strain_threshold)),
            u8::from(r.exceeds_stress(material.stress_threshold))
        )?;
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured grid of the deformed membrane
/// `(x0 + u, y0 + v, w)` with velocity point data.
pub fn write_vtk<T: Scalar, W: Write>(out: &mut W, mesh: &Mesh<T>, title: &str, a: &[T], adot: &[T]) -> io::Result<()> {
    let n = mesh.n_nodes();
    check_len("displacement", a, 3 * n)?;
    check_len("velocity", adot, 3 * n)?;
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for (i, node) in mesh.nodes().iter().enumerate() {
        writeln!(
            out,
            "{} {} {}",
            fmt(node.x0 + a[3 * i]),
            fmt(node.y0 + a[3 * i + 1]),
            fmt(a[3 * i + 2])
        )?;
    }
    let nt = mesh.n_triangles();
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for tri in mesh.triangles() {
        let [p, q, r] = tri.0;
        writeln!(out, "3 {p} {q} {r}")?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "SCALARS vmag double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in adot.chunks_exact(3) {
        writeln!(out, "{}", fmt(norm3(v)))?;
    }
    writeln!(out, "VECTORS velocity double")?;
    for v in adot.chunks_exact(3) {
        writeln!(out, "{} {} {}", fmt(v[0]), fmt(v[1]), fmt(v[2]))?;
    }
    Ok(())
}

/// Summary written next to the snapshots of every run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub version: String,
    pub tau: f64,
    pub steps: usize,
    pub t_end: f64,
    pub n_nodes: usize,
    pub n_elements: usize,
    pub threads: usize,
    pub wall_time_s: f64,
    pub snapshots: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()
    }
}

/// Which files a [`SnapshotWriter`] emits per output time.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotFiles {
    pub vtk: bool,
    pub elements: bool,
}

/// Writes numbered snapshot files into one directory.
#[derive(Debug)]
pub struct SnapshotWriter {
    dir: PathBuf,
    files: SnapshotFiles,
    written: Vec<String>,
}

impl SnapshotWriter {
    pub fn new(dir: impl Into<PathBuf>, files: SnapshotFiles) -> io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn create(&mut self, name: String) -> io::Result<BufWriter<File>> {
        let file = File::create(self.dir.join(&name))?;
        self.written.push(name);
        Ok(BufWriter::new(file))
    }

    pub fn write<T: Scalar>(
        &mut self,
        mesh: &Mesh<T>,
        material: &MaterialParams<T>,
        state: &State<T>,
        responses: Option<&[ElementResponse<T>]>,
    ) -> io::Result<()> {
        let (step, t, a, adot) = (state.step, state.t, &state.a, &state.adot);
        let mut w = self.create(format!("snapshot_{step:06}.csv"))?;
        write_snapshot_csv(&mut w, mesh, t, a, adot)?;
        w.flush()?;
        if self.files.vtk {
            let mut w = self.create(format!("snapshot_{step:06}.vtk"))?;
            write_vtk(&mut w, mesh, &format!("membrane t = {}", fmt(t)), a, adot)?;
            w.flush()?;
        }
        if let (true, Some(r)) = (self.files.elements, responses) {
            let mut w = self.create(format!("elements_{step:06}.csv"))?;
            write_element_csv(&mut w, t, r, material)?;
            w.flush()?;
        }
        Ok(())
    }
}
