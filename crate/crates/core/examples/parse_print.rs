//! Parse a program, print it back, and show a located syntax error.

use pgcl::syntax::{parse_program, pretty_print};

fn main() {
    let src = "var x, y;\n(x := 1 || x := 2); if x = 1 then { y :~ {1/3: 0, 2/3: 1} } else { skip } +[1/4] y := x";
    let file = parse_program(src).expect("valid program");
    println!("header:  {}", file.header);
    println!("program: {}", pretty_print(&file.program));
    println!("ast:     {:?}", file.program);
    let again = parse_program(&file.to_string()).expect("printed form reparses");
    assert_eq!(again.program, file.program);

    let bad = "var x;\nx := 1 +[3/2] skip";
    match parse_program(bad) {
        Ok(_) => unreachable!(),
        Err(e) => println!("\n{}", e.render(bad)),
    }
}
