use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{PipeNetwork, PipeSegment};
use crate::error::{Error, Result};

const PIPE_HEADER: [&str; 5] = ["node_a", "node_b", "length_km", "diameter_mm", "age_years"];
const STATION_HEADER: [&str; 2] = ["station_id", "node_id"];

pub(crate) fn open_csv(path: &Path, header: &[&str]) -> Result<(csv::Reader<fs::File>, Vec<usize>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let cols = header
        .iter()
        .map(|want| {
            found
                .iter()
                .position(|h| h == *want)
                .ok_or_else(|| Error::parse(path, 1, format!("missing column `{want}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rdr, cols))
}

pub(crate) fn parse_f64(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("column `{column}`: cannot parse {raw:?}")))
}

/// Reads `node_a,node_b,length_km,diameter_mm,age_years` pipes and a
/// `station_id,node_id` map; station order follows the map file.
pub fn read_pipe_network(pipes: &Path, stations: &Path) -> Result<PipeNetwork> {
    let (mut rdr, cols) = open_csv(pipes, &PIPE_HEADER)?;
    let mut segments = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(pipes, line, e.to_string()))?;
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let num = |c: usize| parse_f64(pipes, line, PIPE_HEADER[c], field(c));
        let seg = PipeSegment::new(field(0), field(1), num(2)?, num(3)?, num(4)?);
        if !(seg.length_km > 0.0 && seg.diameter_mm > 0.0 && seg.age_years > 0.0) {
            return Err(Error::parse(pipes, line, "pipe attributes must be positive"));
        }
        segments.push(seg);
    }
    let (mut rdr, cols) = open_csv(stations, &STATION_HEADER)?;
    let mut map = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(stations, i + 2, e.to_string()))?;
        map.push((
            rec.get(cols[0]).unwrap_or("").to_string(),
            rec.get(cols[1]).unwrap_or("").to_string(),
        ));
    }
    PipeNetwork::new(segments, [], map)
}

pub fn write_pipe_network(net: &PipeNetwork, pipes: &Path, stations: &Path) -> Result<()> {
    let mut out = PIPE_HEADER.join(",") + "\n";
    for s in net.segments() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.node_a, s.node_b, s.length_km, s.diameter_mm, s.age_years
        ));
    }
    fs::write(pipes, out).map_err(|e| Error::io(pipes, e))?;
    let mut out = STATION_HEADER.join(",") + "\n";
    for (s, n) in net.station_map() {
        out.push_str(&format!("{s},{n}\n"));
    }
    fs::write(stations, out).map_err(|e| Error::io(stations, e))
}

/// Square matrix as CSV with a leading label column and header row.
pub fn write_matrix_csv(path: &Path, labels: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::from("station");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..m.ncols() {
            out.push_str(&format!(",{}", m[(i, j)]));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a labelled square matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let labels: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let m = labels.len();
    let mut out = DMatrix::zeros(m, m);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if i >= m {
            return Err(Error::parse(path, line, format!("more than {m} rows")));
        }
        if rec.get(0) != Some(labels[i].as_str()) {
            return Err(Error::parse(path, line, format!("expected row label {}", labels[i])));
        }
        for j in 0..m {
            out[(i, j)] = parse_f64(path, line, &labels[j], rec.get(j + 1).unwrap_or(""))?;
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::parse(path, rows + 1, format!("expected {m} rows, found {rows}")));
    }
    Ok((labels, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let pipes = dir.path().join("pipes.csv");
        let stations = dir.path().join("stations.csv");
        fs::write(
            &pipes,
            "node_a,node_b,length_km,diameter_mm,age_years\nn1,n2,1.5,300,10\nn2,n3,0.5,200,4\n",
        )
        .unwrap();
        fs::write(&stations, "station_id,node_id\nS1,n1\nS2,n3\n").unwrap();
        let net = read_pipe_network(&pipes, &stations).unwrap();
        assert_eq!(net.station_ids(), vec!["S1", "S2"]);
        assert_eq!(net.segments().len(), 2);

        let p2 = dir.path().join("p2.csv");
        let s2 = dir.path().join("s2.csv");
        write_pipe_network(&net, &p2, &s2).unwrap();
        let again = read_pipe_network(&p2, &s2).unwrap();
        assert_eq!(again.segments(), net.segments());

        fs::write(&pipes, "node_a,node_b,length_km,age_years\nn1,n2,1.5,10\n").unwrap();
        let err = read_pipe_network(&pipes, &stations).unwrap_err().to_string();
        assert!(err.contains("diameter_mm"), "{err}");

        fs::write(
            &pipes,
            "node_a,node_b,length_km,diameter_mm,age_years\nn1,n2,1.5,abc,10\n",
        )
        .unwrap();
        let err = read_pipe_network(&pipes, &stations).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let labels = vec!["A".to_string(), "B".to_string()];
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.1 + 0.2, 0.1 + 0.2, 0.0]);
        write_matrix_csv(&path, &labels, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), (labels, m));
        fs::write(&path, "station,A,B\nA,0,1\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }
}
