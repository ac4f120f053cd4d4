fn main() {
    println!("manytime: scaffold");
}
