fn main() {
    println!("memlab: placeholder");
}
