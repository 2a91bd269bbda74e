//! Read an XYZM frame, inspect it and cut an observation window.
//!
//! cargo run --example parse_window

use ddp::frame::{extract_window, parse_xyzm, to_xyzm_string};
use ddp::WindowSpec;

fn main() -> ddp::Result<()> {
    // A 4x3 frame with one invalid point (the sensor saw nothing there).
    let mut text = String::from("XYZM 4 3\n");
    for row in 0..3 {
        for col in 0..4 {
            if (row, col) == (1, 2) {
                text.push_str("nan nan nan -1\n");
            } else {
                let m = 200 - 10 * (row * 4 + col);
                text.push_str(&format!("{col} {row} {} {m}\n", 0.1 * (row + col) as f64));
            }
        }
    }
    let frame = parse_xyzm(text.as_bytes())?;
    println!(
        "{}x{} frame, {} of {} points valid",
        frame.width(),
        frame.height(),
        frame.valid_count(),
        frame.point_count()
    );

    let window: WindowSpec = "0:1,1:3".parse()?;
    let cut = extract_window(&frame, &window)?;
    println!("window {window} -> {}x{}", cut.width(), cut.height());
    print!("{}", to_xyzm_string(&cut)?);

    match extract_window(&frame, &"0:5,0:1".parse()?) {
        Err(e) => println!("out of bounds: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
