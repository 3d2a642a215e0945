use std::io::Write;

use serde::Serialize;

use super::graph::SignedGraph;

fn io_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    source: &'a str,
    target: &'a str,
    weight: f64,
    records: usize,
}

/// Weighted edge list: `source,target,weight,records`.
pub fn write_edge_csv<W: Write>(g: &SignedGraph, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &g.edges {
        w.serialize(EdgeRow {
            source: &g.nodes[e.a].person,
            target: &g.nodes[e.b].person,
            weight: e.weight,
            records: e.provenance.len(),
        })
        .map_err(io_err)?;
    }
    w.flush()
}

/// Writes any serialisable rows as CSV with a header.
pub fn write_rows_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush()
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// GEXF 1.3 with node attributes party, state and profession, and the
/// contributing record count per edge.
pub fn write_gexf<W: Write>(g: &SignedGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<gexf xmlns="http://gexf.net/1.3" version="1.3">"#)?;
    writeln!(out, r#"  <graph mode="static" defaultedgetype="undirected">"#)?;
    writeln!(out, r#"    <attributes class="node">"#)?;
    for (i, name) in ["party", "state", "profession"].iter().enumerate() {
        writeln!(out, r#"      <attribute id="{i}" title="{name}" type="string"/>"#)?;
    }
    writeln!(out, "    </attributes>")?;
    writeln!(out, r#"    <attributes class="edge">"#)?;
    writeln!(out, r#"      <attribute id="0" title="records" type="integer"/>"#)?;
    writeln!(out, "    </attributes>")?;
    writeln!(out, "    <nodes>")?;
    for (i, n) in g.nodes.iter().enumerate() {
        writeln!(out, r#"      <node id="{i}" label="{}">"#, esc(&n.person))?;
        writeln!(out, "        <attvalues>")?;
        let values = [Some(n.party.name()), n.state.as_deref(), n.profession.as_deref()];
        for (j, v) in values.iter().enumerate() {
            if let Some(v) = v {
                writeln!(out, r#"          <attvalue for="{j}" value="{}"/>"#, esc(v))?;
            }
        }
        writeln!(out, "        </attvalues>")?;
        writeln!(out, "      </node>")?;
    }
    writeln!(out, "    </nodes>")?;
    writeln!(out, "    <edges>")?;
    for (i, e) in g.edges.iter().enumerate() {
        writeln!(
            out,
            r#"      <edge id="{i}" source="{}" target="{}" weight="{}">"#,
            e.a, e.b, e.weight
        )?;
        writeln!(out, r#"        <attvalues><attvalue for="0" value="{}"/></attvalues>"#, e.provenance.len())?;
        writeln!(out, "      </edge>")?;
    }
    writeln!(out, "    </edges>")?;
    writeln!(out, "  </graph>")?;
    writeln!(out, "</gexf>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarnet::graph::Party;

    #[test]
    fn edge_csv_and_gexf() {
        let mut g = SignedGraph::from_edges(&[Party::Republican, Party::Democrat, Party::Democrat], &[(0, 1, -2.0), (1, 2, 3.0)]).unwrap();
        g.nodes[0].person = "A & B".into();
        let mut csv = Vec::new();
        write_edge_csv(&g, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "source,target,weight,records\nA & B,n1,-2.0,0\nn1,n2,3.0,0\n");
        let mut xml = Vec::new();
        write_gexf(&g, &mut xml).unwrap();
        let xml = String::from_utf8(xml).unwrap();
        assert!(xml.contains(r#"label="A &amp; B""#));
        assert!(xml.contains(r#"source="0" target="1" weight="-2""#));
        assert_eq!(xml.matches("<node ").count(), 3);
        assert_eq!(xml.matches("<edge ").count(), 2);
    }
}
