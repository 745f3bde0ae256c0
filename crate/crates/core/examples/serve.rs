//! Serves the pages over HTTP on a free port, fetches a few routes, then
//! shuts down.
//!
//! cargo run --example serve

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use lq::app::{gen_data, start, App, GenConfig};

fn get(port: u16, path: &str) -> String {
    let mut s = TcpStream::connect(("127.0.0.1", port)).expect("server is listening");
    write!(s, "GET {path} HTTP/1.0\r\nHost: localhost\r\n\r\n").expect("request sent");
    let mut out = String::new();
    s.read_to_string(&mut out).expect("response read");
    out
}

fn main() {
    let app = App::new(Arc::new(gen_data(&GenConfig::new(42, 1)).db));
    let server = start(app, "127.0.0.1:0", 2).expect("binds");
    let port = server.port();
    println!("listening on 127.0.0.1:{port}");
    for path in ["/health", "/ligands?filter=immuno", "/object/3", "/disease/999999", "/metrics"] {
        let resp = get(port, path);
        println!("{path} -> {}", resp.lines().next().unwrap_or_default());
    }
    server.stop();
}
